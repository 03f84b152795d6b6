"""Quasi-static probe-detuning sweeps for each model."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .ensemble import CloudParams, RydbergState, ensemble_susceptibility
from .ions import ShiftSample, ion_spectrum
from .numerics import DEFAULT_SETTINGS, NumericalSettings
from .optics import Spectrum
from .pair import AtomParams, LaserParams, pair_susceptibility, single_atom_susceptibility
from .parallel import pmap

MODELS = ("single", "pair", "ensemble", "ion-mc")


class SweepError(RuntimeError):
    """A model evaluation failed at one grid point."""

    def __init__(self, delta: float, cause: Exception):
        super().__init__(f"at delta_p = {delta:g} MHz: {cause}")
        self.delta = delta


def sweep_spectrum(model: str, lasers: LaserParams, atom: AtomParams, cloud: CloudParams, grid, *,
                   v: float = 0.0, state: RydbergState | None = None, shifts: ShiftSample | None = None,
                   settings: NumericalSettings = DEFAULT_SETTINGS, jobs: int = 1) -> Spectrum:
    """Susceptibility and transmission against probe detuning ``grid`` (MHz).

    ``model`` is one of ``single``, ``pair`` (interaction ``v`` in MHz),
    ``ensemble`` (needs ``state``) or ``ion-mc`` (needs ``shifts``). All other
    parameters stay fixed across the sweep.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("detuning grid must be a non-empty 1-d sequence")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("detuning grid must be strictly increasing")
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")

    if model == "ion-mc":
        if shifts is None:
            raise ValueError("ion-mc model needs a ShiftSample")
        return ion_spectrum(lasers, atom, shifts, grid, cloud, settings)
    if model == "ensemble" and state is None:
        raise ValueError("ensemble model needs a RydbergState")

    def point(delta: float) -> complex:
        here = replace(lasers, delta_p=float(delta))
        try:
            if model == "single":
                return single_atom_susceptibility(here, atom, cloud.density, settings=settings).value
            if model == "pair":
                return pair_susceptibility(here, atom, v, cloud.density, settings).value
            return ensemble_susceptibility(here, atom, state, cloud, settings).value
        except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            raise SweepError(float(delta), exc) from exc

    chi = np.array(pmap(point, grid, jobs), dtype=complex)
    return Spectrum.from_chi("delta_MHz", grid, chi, cloud)
