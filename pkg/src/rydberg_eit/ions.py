"""Monte Carlo model of ion Stark shifts and the resulting EIT lineshape.

Atoms are placed uniformly in a sphere and a fixed fraction is flagged as
ions. Each analysed neutral atom sees the Coulomb microfield of the ions in
a sphere of half the sample radius centred on it; analysed atoms sit within
half the sample radius of the centre, so that neighbourhood always lies
inside the cloud. The quadratic Stark shift moves the Rydberg level and the
spectrum is the mean of the shifted single-atom lineshapes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import epsilon_0
from scipy.optimize import least_squares

from .ensemble import CloudParams
from .lindblad import SteadyStateError, check_states, steady_states, unvec
from .numerics import DEFAULT_SETTINGS, NumericalSettings
from .optics import Spectrum
from .pair import (
    AtomParams,
    LaserParams,
    G,
    E,
    chi_prefactor,
    detuning_superoperators,
    single_atom_chi,
    single_atom_stack,
)

# Coulomb field of one elementary charge at 1 um, in V/cm.
COULOMB_V_PER_CM_UM2 = ELEMENTARY_CHARGE / (4.0 * math.pi * epsilon_0) * 1e12 / 100.0
MIN_SEPARATION = 1e-3  # um
# beyond this shift (MHz) the rank-4 update loses accuracy; solve directly
WOODBURY_MAX_SHIFT = 1e3


class CoincidentChargeError(ValueError):
    pass


@dataclass(frozen=True)
class CloudSample:
    positions: np.ndarray  # (n, 3), um
    ion_flags: np.ndarray  # (n,), bool
    radius: float  # um
    seed: object

    @property
    def atom_count(self) -> int:
        return len(self.ion_flags)


@dataclass(frozen=True)
class ShiftSample:
    """Two-photon resonance shifts (MHz) of analysed neutral atoms.

    ``realization`` labels the Monte Carlo cloud each shift came from and
    ``excluded`` counts atoms dropped for sitting on top of an ion.
    """

    shifts: np.ndarray
    realization: np.ndarray
    realizations: int
    excluded: int = 0

    def __post_init__(self):
        if not np.all(np.isfinite(self.shifts)):
            raise ValueError("shifts must be finite")


def sphere_radius(density: float, atom_count: int) -> float:
    """Radius (um) of the sphere holding ``atom_count`` atoms at ``density`` (um^-3)."""
    return (atom_count / (4.0 / 3.0 * math.pi * density)) ** (1.0 / 3.0)


def sample_cloud(density: float, atom_count: int, ion_fraction: float, seed) -> CloudSample:
    """Uniform random cloud at ``density`` (um^-3) with ``round(ion_fraction * atom_count)`` ions."""
    if atom_count < 100:
        raise ValueError("atom_count must be at least 100")
    if not 0.0 <= ion_fraction <= 1.0:
        raise ValueError(f"ion_fraction must lie in [0, 1], got {ion_fraction}")
    if density <= 0:
        raise ValueError("density must be positive")
    rng = np.random.default_rng(seed)
    radius = sphere_radius(density, atom_count)
    direction = rng.standard_normal((atom_count, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    positions = radius * np.cbrt(rng.random(atom_count))[:, None] * direction
    flags = np.zeros(atom_count, dtype=bool)
    n_ions = int(round(ion_fraction * atom_count))
    flags[rng.choice(atom_count, size=n_ions, replace=False)] = True
    return CloudSample(positions, flags, radius, seed)


def _fields(targets: np.ndarray, ions: np.ndarray, cutoff: float | None):
    """Field magnitudes (V/cm) at ``targets`` and a mask of targets too close to an ion."""
    if len(ions) == 0:
        return np.zeros(len(targets)), np.zeros(len(targets), dtype=bool)
    sep = targets[:, None, :] - ions[None, :, :]
    dist = np.linalg.norm(sep, axis=2)
    coincident = np.any(dist < MIN_SEPARATION, axis=1)
    weight = np.where(dist < MIN_SEPARATION, 0.0, 1.0 / np.maximum(dist, MIN_SEPARATION) ** 3)
    if cutoff is not None:
        weight = np.where(dist < cutoff, weight, 0.0)
    field = COULOMB_V_PER_CM_UM2 * np.einsum("ij,ijk->ik", weight, sep)
    return np.linalg.norm(field, axis=1), coincident


def local_field(sample: CloudSample, index: int, cutoff: float | None = None) -> float:
    """Electric field magnitude (V/cm) at neutral atom ``index`` from all ions.

    With ``cutoff`` (um) only ions closer than that contribute.
    """
    if sample.ion_flags[index]:
        raise ValueError(f"atom {index} is an ion")
    field, coincident = _fields(sample.positions[index][None], sample.positions[sample.ion_flags], cutoff)
    if coincident[0]:
        raise CoincidentChargeError(f"atom {index} lies within {MIN_SEPARATION} um of an ion")
    return float(field[0])


def stark_shift(field, alpha0: float):
    """Quadratic Stark shift ``-alpha0 F^2 / 2`` in MHz for ``field`` in V/cm."""
    field = np.asarray(field, dtype=float)
    if np.any(field < 0):
        raise ValueError("field magnitude must be non-negative")
    out = -0.5 * alpha0 * field**2
    return float(out) if out.ndim == 0 else out


def realization_seeds(seed: int, realizations: int):
    """Per-cloud seeds: children of ``SeedSequence(seed)`` in spawn order."""
    return np.random.SeedSequence(seed).spawn(realizations)


def cloud_shifts(sample: CloudSample, alpha0: float):
    """Shifts of neutral atoms inside half the sample radius, plus the count excluded."""
    half = 0.5 * sample.radius
    inner = (~sample.ion_flags) & (np.linalg.norm(sample.positions, axis=1) < half)
    field, coincident = _fields(sample.positions[inner], sample.positions[sample.ion_flags], half)
    return stark_shift(field[~coincident], alpha0), int(coincident.sum())


def sample_shifts(density: float, atom_count: int, ion_fraction: float, alpha0: float,
                  realizations: int = 32, seed: int = 0) -> ShiftSample:
    shifts, labels, excluded = [], [], 0
    for k, child in enumerate(realization_seeds(seed, realizations)):
        s, n_out = cloud_shifts(sample_cloud(density, atom_count, ion_fraction, child), alpha0)
        shifts.append(s)
        labels.append(np.full(len(s), k))
        excluded += n_out
    return ShiftSample(np.concatenate(shifts), np.concatenate(labels), realizations, excluded)


def shifted_coherences(lasers: LaserParams, atom: AtomParams, deltas, shifts, groups=None,
                       settings: NumericalSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Mean single-atom coherence rho_ge over atoms with Rydberg shifts ``shifts`` (MHz).

    Returns an array ``(len(deltas), n_groups)``: one mean per group label in
    ``groups`` (all atoms in one group by default).

    The shift enters the Liouvillian through four diagonal entries, so for
    each detuning the linear system is a rank-4 update of the unshifted one
    and is solved with the Woodbury identity; very large shifts are solved
    directly. Every state is checked against the full Liouvillian.
    """
    shifts = np.asarray(shifts, dtype=float)
    if shifts.size == 0:
        raise ValueError("no atoms in the analysis region")
    groups = np.zeros(len(shifts), dtype=int) if groups is None else np.asarray(groups)
    n_groups = int(groups.max()) + 1
    unique, inverse = np.unique(shifts, return_inverse=True)
    counts = np.bincount(groups, minlength=n_groups).astype(float)

    _, shift_super = detuning_superoperators()
    shift_diag = np.diag(shift_super)
    idx_ge = G + 3 * E

    far = np.abs(unique) > WOODBURY_MAX_SHIFT
    out = np.zeros((len(deltas), n_groups), dtype=complex)
    stack = single_atom_stack(lasers, atom, deltas)
    for i, liouv in enumerate(stack):
        x = np.empty((len(unique), 9), dtype=complex)
        x[~far] = _woodbury_states(liouv, unique[~far], shift_diag, settings)
        if np.any(far):
            far_stack = liouv[None] + unique[far, None, None] * shift_super[None]
            x[far] = vec_batch(steady_states(far_stack, settings))
        per_atom = x[inverse, idx_ge]
        out[i] = np.bincount(groups, weights=per_atom.real, minlength=n_groups) / counts + 1j * (
            np.bincount(groups, weights=per_atom.imag, minlength=n_groups) / counts
        )
    return out


def vec_batch(rhos: np.ndarray) -> np.ndarray:
    return np.swapaxes(rhos, -1, -2).reshape(rhos.shape[0], -1)


def _woodbury_states(liouv, shifts, shift_diag, settings):
    """Vectorized steady states of ``liouv + s * diag(shift_diag)`` for moderate shifts ``s``."""
    if shifts.size == 0:
        return np.zeros((0, 9), dtype=complex)
    diag = shift_diag.copy()
    diag[0] = 0.0  # the trace row does not depend on the shift
    cols = np.flatnonzero(np.abs(diag) > 0)
    d_vals = diag[cols]
    system = liouv.copy()
    system[0, :] = np.eye(3).reshape(-1, order="F")
    if np.linalg.cond(system) > settings.max_condition:
        raise SteadyStateError("single-atom steady state is not unique")
    b = np.zeros(9, dtype=complex)
    b[0] = 1.0
    sol = np.linalg.solve(system, np.column_stack([b, np.eye(9)[:, cols]]))
    y0, w = sol[:, 0], sol[:, 1:]
    gram = w[cols, :] * d_vals[None, :]  # U^T A0^-1 U D
    # x = y0 - W D t with (I/s + G D) t = U^T y0; rows scaled by s when |s| < 1
    big = np.abs(shifts) >= 1.0
    scale = np.where(big, 1.0, shifts)
    diag_term = np.where(big, 1.0 / np.where(big, shifts, 1.0), 1.0)
    lhs = diag_term[:, None, None] * np.eye(len(cols))[None] + scale[:, None, None] * gram[None]
    t = np.linalg.solve(lhs, (scale[:, None] * y0[cols][None, :])[..., None])[..., 0]
    x = y0[None, :] - (t * d_vals[None, :]) @ w.T
    resid = np.abs(x @ liouv.T + shifts[:, None] * shift_diag[None, :] * x).max(axis=1)
    check_states(unvec(x), resid, settings)
    return x


def ion_spectrum(lasers: LaserParams, atom: AtomParams, shifts: ShiftSample, deltas,
                 cloud: CloudParams = CloudParams(), settings: NumericalSettings = DEFAULT_SETTINGS,
                 per_realization: bool = False):
    """Ion-averaged EIT spectrum on the probe-detuning grid ``deltas`` (MHz).

    With ``per_realization`` also returns one spectrum per Monte Carlo cloud.
    """
    deltas = np.asarray(deltas, dtype=float)
    pref = chi_prefactor(atom, lasers.omega_p, cloud.density)
    if not per_realization:
        sigma = shifted_coherences(lasers, atom, deltas, shifts.shifts, settings=settings)[:, 0]
        return Spectrum.from_chi("delta_MHz", deltas, pref * sigma, cloud)
    sigma = shifted_coherences(lasers, atom, deltas, shifts.shifts, shifts.realization, settings)
    counts = np.bincount(shifts.realization, minlength=sigma.shape[1]).astype(float)
    total = Spectrum.from_chi("delta_MHz", deltas, pref * (sigma @ counts) / counts.sum(), cloud)
    parts = [Spectrum.from_chi("delta_MHz", deltas, pref * sigma[:, k], cloud)
             for k in range(sigma.shape[1]) if counts[k] > 0]
    return total, parts


@dataclass(frozen=True)
class PeakFit:
    """Two-photon peak position ``shift`` (MHz) and the fraction of atoms still in it."""

    shift: float
    fraction: float
    rms: float

    def as_dict(self) -> dict:
        return {"shift_MHz": self.shift, "fraction": self.fraction, "rms": self.rms}


def fit_peak_shift(spectrum: Spectrum, lasers: LaserParams, atom: AtomParams, cloud: CloudParams = CloudParams(),
                   window: float = 8.0, settings: NumericalSettings = DEFAULT_SETTINGS) -> PeakFit:
    """Locate the EIT transparency peak in an ion-broadened spectrum.

    The absorption within ``window`` MHz of resonance is fitted by a fraction
    of atoms showing EIT with a common two-photon shift, the rest absorbing
    as with the coupling laser off.
    """
    mask = np.abs(spectrum.x) <= window
    if np.count_nonzero(mask) < 5:
        raise ValueError("fewer than 5 grid points inside the fit window")
    x = spectrum.x[mask]
    data = spectrum.chi_imag[mask]
    off = single_atom_chi(replace(lasers, omega_c=0.0), atom, x, cloud.density, settings=settings).imag
    scale = np.max(off)

    def eit(shift):
        return single_atom_chi(lasers, atom, x, cloud.density, rydberg_shift=shift, settings=settings).imag

    hole = off - data
    start_shift = float(x[np.argmax(hole)])
    depth0 = np.max(off - eit(0.0))
    start_frac = float(np.clip(np.max(hole) / depth0, 0.05, 0.95)) if depth0 > 0 else 0.5

    def residuals(p):
        frac, shift = p
        return (frac * eit(shift) + (1.0 - frac) * off - data) / scale

    res = least_squares(residuals, [start_frac, start_shift], bounds=([0.0, -window], [1.0, window]),
                        xtol=1e-10, ftol=1e-10, gtol=1e-10)
    return PeakFit(shift=float(res.x[1]), fraction=float(res.x[0]),
                   rms=float(np.sqrt(np.mean(res.fun**2))))
