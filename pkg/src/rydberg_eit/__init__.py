"""Two-atom Rydberg EIT model: pair steady states, ensemble and ion averages, fits."""
from .ensemble import (
    N0,
    STATE_42S,
    STATE_48S,
    CloudParams,
    QuadratureError,
    RydbergState,
    blockade_radius,
    ensemble_susceptibility,
    nn_mean_separation,
)
from .fitting import Chi3Fit, DensityFit, FitError, fit_chi3, fit_density
from .ions import PeakFit, ShiftSample, fit_peak_shift, ion_spectrum, sample_shifts
from .lindblad import LindbladTerm, SteadyStateError, build_liouvillian, partial_trace, steady_state
from .numerics import DEFAULT_SETTINGS, NumericalSettings, solver_audit
from .optics import Spectrum, rabi_to_field, transmission
from .pair import (
    AtomParams,
    LaserParams,
    Susceptibility,
    blockaded_state,
    dark_state,
    pair_susceptibility,
    single_atom_susceptibility,
)
from .spectra import sweep_spectrum

__all__ = [
    "AtomParams", "Chi3Fit", "CloudParams", "DEFAULT_SETTINGS", "DensityFit", "FitError",
    "LaserParams", "LindbladTerm", "N0", "NumericalSettings", "PeakFit", "QuadratureError",
    "RydbergState", "STATE_42S", "STATE_48S", "ShiftSample", "Spectrum", "SteadyStateError",
    "Susceptibility", "blockade_radius", "blockaded_state", "build_liouvillian", "dark_state",
    "ensemble_susceptibility", "fit_chi3", "fit_density", "fit_peak_shift", "ion_spectrum",
    "nn_mean_separation", "pair_susceptibility", "partial_trace", "rabi_to_field", "sample_shifts",
    "single_atom_susceptibility", "solver_audit", "steady_state", "sweep_spectrum", "transmission",
]
