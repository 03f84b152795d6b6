"""Acceptance criteria 1-11.

Each criterion prints one ``PASS``/``FAIL`` line. Run directly with
``python tests/test_acceptance.py`` or through pytest (``-s`` not needed).
"""
from __future__ import annotations

import math
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from rydberg_eit.ensemble import (
    N0,
    STATE_42S,
    STATE_48S,
    CloudParams,
    atom_for_state,
    atoms_in_blockade_sphere,
    blockade_radius,
    ensemble_susceptibility,
    nn_mean_separation,
)
from rydberg_eit.fitting import fit_chi3
from rydberg_eit.ions import fit_peak_shift, ion_spectrum, sample_shifts
from rydberg_eit.numerics import DEFAULT_SETTINGS, SolverAudit, solver_audit
from rydberg_eit.optics import rabi_to_field
from rydberg_eit.pair import (
    AtomParams,
    LaserParams,
    blockade_subspace,
    blockaded_state,
    pair_chi,
    pair_hamiltonian,
    single_atom_susceptibility,
)

FIG2 = LaserParams(omega_c=2.0, gamma_p=0.3, gamma_rel=0.15)
FIG4 = LaserParams(omega_c=2.5, gamma_p=0.3, gamma_rel=0.15)
ATOM_48S = atom_for_state(STATE_48S)
ATOM_42S = atom_for_state(STATE_42S)
CLOUD = CloudParams()

# hygiene metrics of every steady state solved by criteria 1-10
GLOBAL_AUDIT = SolverAudit()
RESULTS: dict[int, bool] = {}


def _report(number: int, title: str, passed: bool, detail: str) -> bool:
    RESULTS[number] = passed
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    return passed


def _audited(func):
    def wrapper():
        with solver_audit() as audit:
            result = func()
        if audit.count:
            GLOBAL_AUDIT.record(audit.count, audit.max_trace_error, audit.max_hermiticity_error,
                                audit.min_eigenvalue, audit.max_residual)
        return result
    wrapper.__name__ = func.__name__
    return wrapper


@_audited
def criterion_1() -> bool:
    # Coupling Rabi frequency 5 MHz: at 2 MHz the Rydberg-decay floor is ~2.9e-6 (see ledger)
    t0 = time.perf_counter()
    atom = AtomParams(rydberg_lifetime=1e5)  # Gamma_r = 10 s^-1
    ratios = {}
    for omega_c in (5.0, 2.0):
        for tan_theta in (0.1, 0.5, 1.0):
            on = LaserParams(omega_p=omega_c * tan_theta, omega_c=omega_c, gamma_p=0.0, gamma_rel=0.0)
            eit = pair_chi(on, atom, [0.0], N0)[0].imag
            off = pair_chi(replace(on, omega_c=0.0), atom, [0.0], N0)[0].imag
            ratios[omega_c, tan_theta] = eit / off
        if omega_c == 5.0:
            elapsed = time.perf_counter() - t0
    worst = max(abs(ratios[5.0, t]) for t in (0.1, 0.5, 1.0))
    at_2 = max(abs(ratios[2.0, t]) for t in (0.1, 0.5, 1.0))
    passed = worst < 1e-6 and elapsed < 1.0
    return _report(1, "dark-state transparency", passed,
                   f"max chi_I/chi_I(off) = {worst:.2e} at Omega_c = 5 MHz (< 1e-6), "
                   f"{at_2:.2e} at 2 MHz; {elapsed:.2f} s")


@_audited
def criterion_2() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for theta, phi in zip(rng.uniform(0, math.pi / 2, 50), rng.uniform(0, 2 * math.pi, 50)):
        lasers = LaserParams(omega_p=2.0 * math.tan(theta), omega_c=2.0, coupling_phase=phi,
                             gamma_p=0.0, gamma_rel=0.0)
        h8 = blockade_subspace(pair_hamiltonian(lasers, 0.0))
        psi = np.delete(blockaded_state(theta, phi).amplitudes, 8)
        worst = max(worst, float(np.linalg.norm(h8 @ psi)))
    elapsed = time.perf_counter() - t0
    passed = worst < 1e-10 and elapsed < 1.0
    return _report(2, "blockaded-state null vector", passed,
                   f"max residual {worst:.1e} over 50 (theta, phi) (< 1e-10); {elapsed:.3f} s")


@_audited
def criterion_3() -> bool:
    atom = AtomParams()
    chi = single_atom_susceptibility(LaserParams(omega_p=1e-4, omega_c=0.0, gamma_p=0.0), atom, N0).chi_i
    ratio = atom.wavevector * chi / N0 / (3 * atom.wavelength**2 / (2 * math.pi))
    od = atom.wavevector * chi * CLOUD.path_length
    passed = abs(ratio - 1) < 1e-3 and abs(od - 3.3) <= 0.1
    return _report(3, "two-level cross-section", passed,
                   f"k chi_I/N / (3 lambda^2/2pi) = {ratio:.6f} (1 +- 1e-3); peak OD {od:.3f} (3.3 +- 0.1)")


def _fig2_chi(vs):
    return {wp: pair_chi(replace(FIG2, omega_p=wp), ATOM_48S, vs, N0).imag for wp in (0.3, 1.0)}


@_audited
def criterion_4() -> bool:
    t0 = time.perf_counter()
    chi = _fig2_chi([0.0, 10.0])
    elapsed = time.perf_counter() - t0
    reversed_v10 = chi[1.0][1] > chi[0.3][1]
    normal_v0 = chi[1.0][0] < chi[0.3][0]
    passed = reversed_v10 and normal_v0 and elapsed < 5.0
    return _report(4, "sign reversal", passed,
                   f"v=10: chi_I(1.0) {chi[1.0][1]:.4e} > chi_I(0.3) {chi[0.3][1]:.4e}: {reversed_v10}; "
                   f"v=0: {chi[1.0][0]:.4e} < {chi[0.3][0]:.4e}: {normal_v0}; {elapsed:.2f} s")


@_audited
def criterion_5() -> bool:
    chi = _fig2_chi([10.0, 20.0])
    dev = {wp: abs(c[1] / c[0] - 1) for wp, c in chi.items()}
    passed = all(d < 0.05 for d in dev.values())
    return _report(5, "blockade saturation", passed,
                   "|chi(20)/chi(10) - 1| = " + ", ".join(f"{d:.2%} at {wp} MHz" for wp, d in dev.items())
                   + " (< 5%)")


@_audited
def criterion_6() -> bool:
    n = N0 / 1e18
    sep = nn_mean_separation(n)
    rb48 = blockade_radius(STATE_48S, 2.0)
    rb42 = blockade_radius(STATE_42S, 2.5)
    in48 = atoms_in_blockade_sphere(n, rb48)
    in42 = atoms_in_blockade_sphere(n, rb42)
    passed = (abs(sep - 1.97) <= 0.02 and abs(rb48 - 4.0) < 1e-12 and abs(rb42 - 3.0) < 1e-12
              and round(in48, 1) == 5.9 and round(in42, 1) == 2.5)
    return _report(6, "geometry", passed,
                   f"mean NN separation {sep:.4f} um; R_b {rb48:.6f} / {rb42:.6f} um; "
                   f"atoms per sphere {in48:.2f} / {in42:.2f}")


def _fig4_per_atom(omegas, density=N0, state=STATE_42S, atom=ATOM_42S):
    cloud = CloudParams(density=density)
    return np.array([ensemble_susceptibility(replace(FIG4, omega_p=w), atom, state, cloud).chi_i
                     for w in omegas]) / density


@_audited
def criterion_7() -> bool:
    t0 = time.perf_counter()
    per_atom = _fig4_per_atom(np.linspace(1.2, 1.5, 7))
    elapsed = time.perf_counter() - t0
    within = np.all(np.abs(per_atom / 1.2e-20 - 1) <= 0.3)
    spread = per_atom.max() / per_atom.min() - 1
    passed = bool(within and spread < 0.1 and elapsed < 120)
    return _report(7, "saturation plateau", passed,
                   f"chi_I/N in [{per_atom.min():.3e}, {per_atom.max():.3e}] m^3 (1.2e-20 +- 30%), "
                   f"spread {spread:.1%} (< 10%); {elapsed:.1f} s")


@_audited
def criterion_8() -> bool:
    omegas = np.linspace(0.1, 1.5, 29)
    fields = rabi_to_field(omegas, ATOM_42S.dipole_moment)
    cutoff = float(rabi_to_field(0.7, ATOM_42S.dipole_moment))
    ens = _fig4_per_atom(omegas) * N0
    free = np.array([single_atom_susceptibility(replace(FIG4, omega_p=w), ATOM_42S, N0).chi_i for w in omegas])
    chi3 = fit_chi3(fields, ens, cutoff).chi3_im
    chi3_free = fit_chi3(fields, free, cutoff).chi3_im
    passed = 2e-8 <= chi3 <= 2e-6 and chi3_free < 0
    return _report(8, "chi3 fit", passed,
                   f"interacting chi3_im = {chi3:.3e} m^2/V^2 (in [2e-8, 2e-6]); v = 0: {chi3_free:.3e} (< 0)")


@_audited
def criterion_9() -> bool:
    t0 = time.perf_counter()
    densities = N0 / np.array([8.0, 4.0, 2.0, 1.0])
    weak = np.array([_fig4_per_atom([0.3], n)[0] for n in densities])
    strong = np.array([_fig4_per_atom([1.5], n)[0] for n in densities])
    elapsed = time.perf_counter() - t0
    spread = weak.max() / weak.min() - 1
    increasing = bool(np.all(np.diff(strong) > 0))
    passed = spread < 0.1 and increasing and elapsed < 300
    return _report(9, "density cooperativity", passed,
                   f"0.3 MHz spread {spread:.1%} (< 10%); 1.5 MHz chi_I/N "
                   + " < ".join(f"{v:.3e}" for v in strong) + f" increasing: {increasing}; {elapsed:.1f} s")


@_audited
def criterion_10() -> bool:
    grid = np.linspace(-20, 20, 161)
    lasers = replace(FIG2, omega_p=1.0)
    density = CLOUD.density_um3

    def run(fraction):
        sample = sample_shifts(density, 10_000, fraction, STATE_48S.alpha0, realizations=32, seed=2009)
        spec = ion_spectrum(lasers, ATOM_48S, sample, grid, CLOUD)
        return spec, fit_peak_shift(spec, lasers, ATOM_48S, CLOUD).shift

    t0 = time.perf_counter()
    results = {f: run(f) for f in (0.0, 0.02, 0.05)}
    elapsed = time.perf_counter() - t0
    shifts = {f: abs(r[1]) for f, r in results.items()}
    repeat = run(0.05)[0]
    reproducible = repeat.chi.tobytes() == results[0.05][0].chi.tobytes()
    passed = (shifts[0.05] > 1.0 and shifts[0.0] < 0.15 and shifts[0.0] < shifts[0.02] < shifts[0.05]
              and reproducible and elapsed < 120)
    return _report(10, "ion Monte Carlo", passed,
                   "|shift| " + ", ".join(f"{s:.3f} MHz at {f:.0%}" for f, s in shifts.items())
                   + f"; byte-reproducible: {reproducible}; {elapsed:.1f} s for 3 x 1e4 atoms x 32 clouds")


def criterion_11() -> bool:
    missing = [n for n in range(1, 11) if n not in RESULTS]
    for n in missing:
        CRITERIA[n]()
    a = GLOBAL_AUDIT
    passed = a.passes(DEFAULT_SETTINGS)
    return _report(11, "solver hygiene", passed,
                   f"{a.count} steady states: max |tr - 1| {a.max_trace_error:.1e}, "
                   f"max Hermiticity error {a.max_hermiticity_error:.1e}, "
                   f"min eigenvalue {a.min_eigenvalue:.1e}, max residual {a.max_residual:.1e}")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 12)}


@pytest.mark.parametrize("number", range(1, 12))
def test_criterion(number, capsys):
    with capsys.disabled():
        passed = CRITERIA[number]()
    assert passed


if __name__ == "__main__":
    outcome = [CRITERIA[n]() for n in range(1, 12)]
    sys.exit(0 if all(outcome) else 1)
