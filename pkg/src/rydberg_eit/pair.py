"""Single-atom and two-atom ladder EIT model.

Frequencies in this module are ordinary frequencies in MHz (Omega/2pi) and
lifetimes are in microseconds. Hamiltonians and Lindblad rates are built in
angular units of rad/us. Single-atom levels are ordered ``g, e, r`` and pair
states follow the product ordering ``|i>_1 (x) |j>_2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import epsilon_0, hbar

from .lindblad import (
    LindbladTerm,
    build_liouvillian,
    commutator_superoperator,
    partial_trace,
    steady_states,
    tensor_product,
)
from .numerics import DEFAULT_SETTINGS, NumericalSettings

TWO_PI = 2.0 * math.pi
G, E, R = 0, 1, 2
LEVELS = "ger"
PAIR_LABELS = tuple(a + b for a in LEVELS for b in LEVELS)
PAIR_INDEX = {label: i for i, label in enumerate(PAIR_LABELS)}
# Alternative ordering grouped by excitation: ground, single e/r, then doubly excited.
GROUPED_BASIS = ("gg", "ge", "eg", "gr", "rg", "ee", "er", "re", "rr")
RR = PAIR_INDEX["rr"]


def _proj(i: int, j: int, d: int = 3) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


@dataclass(frozen=True)
class LaserParams:
    """Probe and coupling fields, all in MHz (Omega/2pi, Delta/2pi, linewidth/2pi).

    ``gamma_p`` is the extra decay rate of the g-e coherence and ``gamma_rel``
    that of the g-r coherence. ``coupling_phase`` is the relative laser phase
    phi_r in radians.
    """

    omega_p: float = 1.0
    omega_c: float = 2.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    gamma_p: float = 0.3
    gamma_rel: float = 0.15
    coupling_phase: float = 0.0

    def __post_init__(self):
        for name in ("omega_p", "omega_c", "gamma_p", "gamma_rel"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def mixing_angle(self) -> float:
        return math.atan2(self.omega_p, self.omega_c)


@dataclass(frozen=True)
class AtomParams:
    """Atomic constants: ``gamma_e`` in MHz (Gamma/2pi), ``rydberg_lifetime`` in us.

    ``dipole`` (C m) defaults to the value that makes the resonant weak-probe
    cross-section equal ``3 lambda^2 / 2 pi`` for the given ``gamma_e``.
    """

    gamma_e: float = 6.07
    rydberg_lifetime: float = 58.0
    wavelength: float = 780.241e-9
    dipole: float | None = None

    def __post_init__(self):
        if self.gamma_e <= 0 or self.rydberg_lifetime <= 0 or self.wavelength <= 0:
            raise ValueError("atomic constants must be strictly positive")
        if self.dipole is not None and self.dipole <= 0:
            raise ValueError("dipole must be strictly positive")

    @property
    def gamma_r(self) -> float:
        """Rydberg decay rate in 1/us (zero for an infinite lifetime)."""
        return 1.0 / self.rydberg_lifetime

    @property
    def wavevector(self) -> float:
        return TWO_PI / self.wavelength

    @property
    def dipole_moment(self) -> float:
        if self.dipole is not None:
            return self.dipole
        omega = SPEED_OF_LIGHT * self.wavevector
        gamma = TWO_PI * self.gamma_e * 1e6
        return math.sqrt(3.0 * math.pi * epsilon_0 * hbar * SPEED_OF_LIGHT**3 * gamma / omega**3)


@dataclass(frozen=True)
class StateVector:
    """Pair state with amplitudes in product order (see ``PAIR_LABELS``)."""

    amplitudes: np.ndarray

    def __getitem__(self, label: str) -> complex:
        return complex(self.amplitudes[PAIR_INDEX[label]])

    def in_grouped_order(self) -> np.ndarray:
        return self.amplitudes[[PAIR_INDEX[label] for label in GROUPED_BASIS]]


@dataclass(frozen=True)
class Susceptibility:
    value: complex

    @property
    def chi_i(self) -> float:
        return float(np.imag(self.value))

    @property
    def chi_r(self) -> float:
        return float(np.real(self.value))


def single_atom_hamiltonian(lasers: LaserParams, rydberg_shift: float = 0.0) -> np.ndarray:
    """Rotating-frame H/hbar in rad/us; ``rydberg_shift`` (MHz) moves |r>."""
    phase = np.exp(1j * lasers.coupling_phase)
    h = (
        -lasers.delta_p * _proj(E, E)
        + (rydberg_shift - lasers.delta_p - lasers.delta_c) * _proj(R, R)
        + 0.5 * lasers.omega_p * (_proj(G, E) + _proj(E, G))
        + 0.5 * lasers.omega_c * (phase * _proj(E, R) + np.conj(phase) * _proj(R, E))
    )
    return TWO_PI * h


def pair_hamiltonian(lasers: LaserParams, v: float = 0.0) -> np.ndarray:
    """Two-atom H/hbar in rad/us with |rr> shifted by ``v`` (MHz)."""
    h1 = single_atom_hamiltonian(lasers)
    eye = np.eye(3)
    h = tensor_product(h1, eye) + tensor_product(eye, h1)
    h[RR, RR] += TWO_PI * v
    return h


def single_atom_terms(atom: AtomParams, lasers: LaserParams) -> list[LindbladTerm]:
    """Decay to |g> from |e> and |r>, plus laser-linewidth dephasing of |e> and |r>."""
    terms = [
        LindbladTerm(_proj(G, E), TWO_PI * atom.gamma_e),
        LindbladTerm(_proj(G, R), atom.gamma_r),
        LindbladTerm(_proj(E, E), 2.0 * TWO_PI * lasers.gamma_p),
        LindbladTerm(_proj(R, R), 2.0 * TWO_PI * lasers.gamma_rel),
    ]
    return [t for t in terms if t.rate > 0]


def decoherence_terms(atom: AtomParams, lasers: LaserParams) -> list[LindbladTerm]:
    eye = np.eye(3)
    out = []
    for term in single_atom_terms(atom, lasers):
        out.append(LindbladTerm(tensor_product(term.operator, eye), term.rate))
        out.append(LindbladTerm(tensor_product(eye, term.operator), term.rate))
    return out


def dark_state(theta: float, phi: float = 0.0) -> StateVector:
    """Product of single-atom dark states; |rr> carries exp(-2i phi)."""
    c, s = math.cos(theta), math.sin(theta)
    amp = np.zeros(9, dtype=complex)
    amp[PAIR_INDEX["gg"]] = c * c
    amp[PAIR_INDEX["gr"]] = amp[PAIR_INDEX["rg"]] = -s * c * np.exp(-1j * phi)
    amp[PAIR_INDEX["rr"]] = s * s * np.exp(-2j * phi)
    return StateVector(amp)


def blockaded_state(theta: float, phi: float = 0.0) -> StateVector:
    """Zero-energy eigenstate once |rr> is removed from the pair space."""
    c, s = math.cos(theta), math.sin(theta)
    norm = 1.0 / math.sqrt(c**4 + 2.0 * s**4)
    amp = np.zeros(9, dtype=complex)
    amp[PAIR_INDEX["gg"]] = norm * (c * c - s * s)
    amp[PAIR_INDEX["gr"]] = amp[PAIR_INDEX["rg"]] = -norm * s * c * np.exp(-1j * phi)
    amp[PAIR_INDEX["ee"]] = norm * s * s
    return StateVector(amp)


def blockade_subspace(op: np.ndarray) -> np.ndarray:
    """Restrict a pair operator to the 8 states without |rr>."""
    keep = [i for i in range(9) if i != RR]
    return op[np.ix_(keep, keep)]


def chi_prefactor(atom: AtomParams, omega_p: float, density: float) -> float:
    """``2 N d^2 / (eps0 hbar Omega_p)`` with Omega_p in MHz and N in m^-3."""
    if omega_p <= 0:
        raise ValueError("probe Rabi frequency must be positive to define a susceptibility")
    if density <= 0:
        raise ValueError("density must be positive")
    return 2.0 * density * atom.dipole_moment**2 / (epsilon_0 * hbar * TWO_PI * omega_p * 1e6)


def single_atom_liouvillian(lasers: LaserParams, atom: AtomParams, rydberg_shift: float = 0.0):
    return build_liouvillian(single_atom_hamiltonian(lasers, rydberg_shift), single_atom_terms(atom, lasers))


def pair_liouvillian(lasers: LaserParams, atom: AtomParams, v: float = 0.0) -> np.ndarray:
    return build_liouvillian(pair_hamiltonian(lasers, v), decoherence_terms(atom, lasers))


def interaction_superoperator() -> np.ndarray:
    """Superoperator of ``-i[|rr><rr|, .]`` per MHz of interaction (times 2pi)."""
    return TWO_PI * commutator_superoperator(_proj(RR, RR, 9))


def pair_steady_states(lasers, atom, vs, settings: NumericalSettings = DEFAULT_SETTINGS):
    """Pair steady states for an array of interaction shifts ``vs`` (MHz)."""
    vs = np.atleast_1d(np.asarray(vs, dtype=float))
    base = pair_liouvillian(lasers, atom, 0.0)
    stack = base[None] + vs[:, None, None] * interaction_superoperator()[None]
    return steady_states(stack, settings)


def pair_chi(lasers, atom, vs, density: float, settings: NumericalSettings = DEFAULT_SETTINGS):
    """Complex susceptibility of atom 1 for each interaction shift in ``vs``."""
    rhos = pair_steady_states(lasers, atom, vs, settings)
    reduced = partial_trace(rhos, 0)
    return chi_prefactor(atom, lasers.omega_p, density) * reduced[:, G, E]


def pair_susceptibility(lasers, atom, v: float, density: float, settings=DEFAULT_SETTINGS) -> Susceptibility:
    return Susceptibility(complex(pair_chi(lasers, atom, [v], density, settings)[0]))


def single_atom_susceptibility(lasers, atom, density: float, rydberg_shift: float = 0.0,
                               settings=DEFAULT_SETTINGS) -> Susceptibility:
    rho = steady_states(single_atom_liouvillian(lasers, atom, rydberg_shift)[None], settings)[0]
    return Susceptibility(complex(chi_prefactor(atom, lasers.omega_p, density) * rho[G, E]))


def detuning_superoperators():
    """Superoperators multiplying the probe detuning and the Rydberg shift (per MHz)."""
    d_delta = commutator_superoperator(-TWO_PI * (_proj(E, E) + _proj(R, R)))
    d_shift = commutator_superoperator(TWO_PI * _proj(R, R))
    return d_delta, d_shift


def single_atom_stack(lasers: LaserParams, atom: AtomParams, deltas, rydberg_shift=0.0):
    """Single-atom Liouvillians for each probe detuning in ``deltas`` (MHz).

    ``rydberg_shift`` may be a scalar or an array matching ``deltas``.
    """
    deltas = np.asarray(deltas, dtype=float)
    shifts = np.broadcast_to(np.asarray(rydberg_shift, dtype=float), deltas.shape)
    base = single_atom_liouvillian(replace(lasers, delta_p=0.0), atom)
    d_delta, d_shift = detuning_superoperators()
    return base[None] + deltas[:, None, None] * d_delta[None] + shifts[:, None, None] * d_shift[None]


def single_atom_chi(lasers, atom, deltas, density: float, rydberg_shift=0.0,
                    settings: NumericalSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Non-interacting susceptibility on a probe-detuning grid."""
    rhos = steady_states(single_atom_stack(lasers, atom, deltas, rydberg_shift), settings)
    return chi_prefactor(atom, lasers.omega_p, density) * rhos[:, G, E]
