"""Rydberg pair interactions and nearest-neighbour averaging over a cloud."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .pair import AtomParams, LaserParams, Susceptibility, chi_prefactor, pair_chi
from .numerics import DEFAULT_SETTINGS, NumericalSettings

# m^-3 per um^-3
PER_UM3 = 1e18


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class RydbergState:
    """nS state constants: ``c6`` in MHz um^6, ``lifetime`` in us, ``alpha0`` in MHz/(V/cm)^2."""

    n: int
    c6: float
    lifetime: float
    alpha0: float = 0.0

    def __post_init__(self):
        if self.c6 <= 0 or self.lifetime <= 0:
            raise ValueError("c6 and lifetime must be positive")


# C6 back-derived from R_b = 4 um at Omega_c/2pi = 2 MHz and R_b = 3 um at 2.5 MHz.
STATE_48S = RydbergState(n=48, c6=2.0 * 4.0**6, lifetime=58.0, alpha0=38.2)
STATE_42S = RydbergState(n=42, c6=2.5 * 3.0**6, lifetime=41.0)
STATES = {"48S": STATE_48S, "42S": STATE_42S}

# Peak ground-state density, 2.2e10 cm^-3, in m^-3.
N0 = 2.2e16


@dataclass(frozen=True)
class CloudParams:
    """Ground-state ``density`` (m^-3), ``path_length`` (m) and probe ``wavevector`` (1/m)."""

    density: float = N0
    path_length: float = 0.52e-3
    wavevector: float = 2.0 * math.pi / 780.241e-9

    def __post_init__(self):
        if self.density <= 0 or self.path_length <= 0 or self.wavevector <= 0:
            raise ValueError("cloud parameters must be positive")

    @property
    def density_um3(self) -> float:
        return self.density / PER_UM3


def atom_for_state(state: RydbergState, **overrides) -> AtomParams:
    return AtomParams(rydberg_lifetime=state.lifetime, **overrides)


def vdw_shift(state: RydbergState, r):
    """Pair interaction magnitude C6/r^6 in MHz for separation ``r`` in um."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("separation must be positive")
    out = state.c6 / r**6
    return float(out) if out.ndim == 0 else out


def blockade_radius(state: RydbergState, omega_c: float) -> float:
    if omega_c <= 0:
        raise ValueError("coupling Rabi frequency must be positive")
    return (state.c6 / omega_c) ** (1.0 / 6.0)


def nn_pdf(r, density: float):
    """Poissonian nearest-neighbour distance density; ``r`` in um, ``density`` in um^-3."""
    r = np.asarray(r, dtype=float)
    return 4.0 * math.pi * density * r**2 * np.exp(-4.0 / 3.0 * math.pi * density * r**3)


def nn_cdf(r, density: float):
    r = np.asarray(r, dtype=float)
    return 1.0 - np.exp(-4.0 / 3.0 * math.pi * density * r**3)


def nn_mean_separation(density: float) -> float:
    value, _ = integrate.quad(lambda r: r * nn_pdf(r, density), 0.0, np.inf, epsabs=1e-12, epsrel=1e-12)
    return value


def atoms_in_blockade_sphere(density: float, r_b: float) -> float:
    return 4.0 / 3.0 * math.pi * r_b**3 * density


def quadrature_nodes(density: float, settings: NumericalSettings = DEFAULT_SETTINGS):
    """Log-spaced separations from ``r_min`` to the radius holding all but ``tail_mass``."""
    r_cut = (3.0 * math.log(1.0 / settings.tail_mass) / (4.0 * math.pi * density)) ** (1.0 / 3.0)
    r_cut = max(r_cut, 2.0 * settings.r_min)
    return np.geomspace(settings.r_min, r_cut, settings.quad_nodes)


def _weights(r: np.ndarray, density: float, pdf) -> np.ndarray:
    """Trapezoid weights in u = ln r for the integrand f(r) p(r) r."""
    u = np.log(r)
    du = np.diff(u)
    w = np.zeros_like(r)
    w[:-1] += 0.5 * du
    w[1:] += 0.5 * du
    return w * pdf(r, density) * r


def ensemble_chi_per_atom(lasers: LaserParams, atom: AtomParams, state: RydbergState, density: float,
                          settings: NumericalSettings = DEFAULT_SETTINGS, pdf=nn_pdf):
    """Nearest-neighbour averaged reduced coherence and its half-resolution estimate.

    ``density`` is in um^-3. Probability below ``r_min`` is assigned the value at
    ``r_min`` (deep blockade) and probability beyond the last node the
    non-interacting value. Returns ``(sigma, sigma_coarse)`` where the coarse
    value uses every other node.
    """
    if settings.quad_nodes % 2 == 0:
        raise ValueError("quad_nodes must be odd so the embedded half-resolution rule shares endpoints")
    r = quadrature_nodes(density, settings)
    vs = np.append(vdw_shift(state, r), 0.0)
    sigma = pair_chi(lasers, atom, vs, PER_UM3, settings) / chi_prefactor(atom, lasers.omega_p, PER_UM3)
    at_nodes, free = sigma[:-1], sigma[-1]
    if pdf is nn_pdf:
        mass_low = float(nn_cdf(r[0], density))
        mass_high = float(1.0 - nn_cdf(r[-1], density))
    else:
        mass_low = integrate.quad(lambda x: pdf(x, density), 0.0, r[0])[0]
        mass_high = integrate.quad(lambda x: pdf(x, density), r[-1], np.inf)[0]

    def rule(nodes, values):
        return np.sum(_weights(nodes, density, pdf) * values) + mass_low * values[0] + mass_high * free

    return rule(r, at_nodes), rule(r[::2], at_nodes[::2])


def ensemble_susceptibility(lasers: LaserParams, atom: AtomParams, state: RydbergState, cloud: CloudParams,
                            settings: NumericalSettings = DEFAULT_SETTINGS, pdf=nn_pdf) -> Susceptibility:
    """Pair susceptibility averaged over the nearest-neighbour distribution of ``cloud``."""
    sigma, coarse = ensemble_chi_per_atom(lasers, atom, state, cloud.density_um3, settings, pdf)
    if abs(sigma - coarse) > settings.quad_rtol * abs(sigma):
        raise QuadratureError(
            f"nearest-neighbour quadrature not converged: {abs(sigma - coarse) / abs(sigma):.2%} change "
            f"between {settings.quad_nodes // 2 + 1} and {settings.quad_nodes} nodes"
        )
    return Susceptibility(complex(chi_prefactor(atom, lasers.omega_p, cloud.density) * sigma))
