import numpy as np
import pytest

from rydberg_eit.ensemble import STATE_48S, CloudParams
from rydberg_eit.ions import ShiftSample
from rydberg_eit.numerics import solver_audit
from rydberg_eit.pair import AtomParams, LaserParams
from rydberg_eit.spectra import SweepError, sweep_spectrum

ATOM = AtomParams(rydberg_lifetime=STATE_48S.lifetime)
CLOUD = CloudParams()


def _sweep(model, omega_p, grid, **kw):
    return sweep_spectrum(model, LaserParams(omega_p=omega_p), ATOM, CLOUD, grid, **kw)


def test_pair_v0_transparency_rises_with_probe():
    low = _sweep("pair", 0.3, [0.0]).transmission[0]
    high = _sweep("pair", 1.0, [0.0]).transmission[0]
    assert high > low


def test_ensemble_transparency_drops_with_probe():
    low = _sweep("ensemble", 0.3, [0.0], state=STATE_48S).transmission[0]
    high = _sweep("ensemble", 1.0, [0.0], state=STATE_48S).transmission[0]
    assert high < low


@pytest.mark.parametrize("model", ["single", "pair", "ensemble", "ion-mc"])
def test_far_wing_nearly_transparent(model):
    shifts = ShiftSample(np.array([0.0, -0.5, -3.0]), np.zeros(3, dtype=int), 1)
    spec = _sweep(model, 1.0, [-20.0], v=10.0, state=STATE_48S, shifts=shifts)
    # Lorentzian wing with the probe-linewidth broadened width Gamma_e + 2 gamma_p
    od = CLOUD.density * 6 * np.pi / CLOUD.wavevector**2 * CLOUD.path_length
    width = ATOM.gamma_e + 2 * 0.3
    wing = np.exp(-od / (1 + 4 * 20.0**2 / width**2))
    assert spec.transmission[0] > 0.9
    assert spec.transmission[0] == pytest.approx(wing, abs=0.01)


def test_rows_independent_of_grid():
    full = _sweep("pair", 1.0, np.linspace(-4, 4, 9), v=10.0)
    part = _sweep("pair", 1.0, [-1.0, 3.0], v=10.0)
    assert np.array_equal(part.chi, full.chi[[3, 7]])


def test_parallel_matches_serial_and_is_audited():
    grid = np.linspace(-3, 3, 7)
    with solver_audit() as audit:
        serial = _sweep("pair", 1.0, grid, v=5.0)
        threaded = _sweep("pair", 1.0, grid, v=5.0, jobs=4)
    assert serial.chi.tobytes() == threaded.chi.tobytes()
    assert audit.count == 14 and audit.passes()


def test_grid_and_model_validation():
    with pytest.raises(ValueError, match="non-empty"):
        _sweep("single", 1.0, [])
    with pytest.raises(ValueError, match="increasing"):
        _sweep("single", 1.0, [1.0, 0.0])
    with pytest.raises(ValueError, match="unknown model"):
        _sweep("triple", 1.0, [0.0])
    with pytest.raises(ValueError, match="RydbergState"):
        _sweep("ensemble", 1.0, [0.0])
    with pytest.raises(ValueError, match="ShiftSample"):
        _sweep("ion-mc", 1.0, [0.0])


def test_numerical_failure_reports_detuning():
    from rydberg_eit.numerics import NumericalSettings
    strict = NumericalSettings(residual_tol=1e-30)
    with pytest.raises(SweepError, match="delta_p = 2"):
        sweep_spectrum("single", LaserParams(), ATOM, CLOUD, [2.0], settings=strict)
