"""Susceptibility-to-transmission conversion and the Spectrum record."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.constants import hbar

from .ensemble import CloudParams

TWO_PI = 2.0 * math.pi


def rabi_to_field(omega_p, dipole: float):
    """Probe field amplitude (V/m) for Rabi frequency ``omega_p`` in MHz (Omega/2pi)."""
    if dipole <= 0:
        raise ValueError("dipole must be positive")
    return hbar * TWO_PI * np.asarray(omega_p, dtype=float) * 1e6 / dipole


def field_to_rabi(field, dipole: float):
    if dipole <= 0:
        raise ValueError("dipole must be positive")
    return np.asarray(field, dtype=float) * dipole / (hbar * TWO_PI * 1e6)


def transmission(chi_i, cloud: CloudParams):
    """Transmitted power fraction ``exp(-k chi_I l)``."""
    chi_i = np.asarray(chi_i, dtype=float)
    if np.any(chi_i < -1e-12):
        raise ValueError("chi_i must be non-negative for a passive medium")
    out = np.exp(-cloud.wavevector * chi_i * cloud.path_length)
    return float(out) if out.ndim == 0 else out


def resonant_cross_section(wavevector: float) -> float:
    """``3 lambda^2 / 2 pi`` written in terms of the wave-vector."""
    return 6.0 * math.pi / wavevector**2


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class Spectrum:
    """Complex susceptibility and transmission against one swept variable.

    ``variable`` names the swept column (``delta_MHz``, ``omega_p_MHz`` or
    ``field_V_per_m``). Both the transmitted fraction and the absorbed
    fraction ``1 - T`` are kept.
    """

    variable: str
    x: np.ndarray
    chi: np.ndarray
    transmission: np.ndarray

    @classmethod
    def from_chi(cls, variable: str, x, chi, cloud: CloudParams) -> "Spectrum":
        x = np.asarray(x, dtype=float)
        chi = np.asarray(chi, dtype=complex)
        if x.shape != chi.shape or x.ndim != 1 or x.size == 0:
            raise ValueError("spectrum needs matching non-empty 1-d grid and susceptibility arrays")
        d = np.diff(x)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("spectrum grid must be strictly monotone")
        # clip round-off below zero so transmission stays within [0, 1]
        t = transmission(np.maximum(chi.imag, 0.0), cloud)
        return cls(variable, x, chi, np.atleast_1d(t))

    @property
    def chi_imag(self) -> np.ndarray:
        return self.chi.imag

    @property
    def chi_real(self) -> np.ndarray:
        return self.chi.real

    @property
    def absorbed_fraction(self) -> np.ndarray:
        return 1.0 - self.transmission

    def header(self) -> list[str]:
        return [self.variable, "chi_real", "chi_imag", "transmission", "absorbed_fraction"]

    def rows(self):
        for x, chi, t in zip(self.x, self.chi, self.transmission):
            yield [x, chi.real, chi.imag, t, 1.0 - t]

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            for row in self.rows():
                writer.writerow([_fmt(v) for v in row])
        return path

    def value_at(self, x0: float) -> int:
        """Index of the grid point nearest ``x0``."""
        return int(np.argmin(np.abs(self.x - x0)))
