"""Run configuration: presets, schema validation and resolution to model objects."""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .ensemble import STATES, CloudParams, RydbergState
from .numerics import NumericalSettings
from .pair import AtomParams, LaserParams

PRESETS = ("fig2", "fig3a", "fig4", "fig5")

DEFAULTS = {
    "state": "48S",
    "lasers": {
        "omega_p": [1.0],
        "omega_c": 2.0,
        "delta_c": 0.0,
        "delta_p": [0.0],
        "gamma_p": 0.3,
        "gamma_rel": 0.15,
    },
    "atom": {"gamma_e": 6.07, "wavelength": 780.241e-9, "dipole": None},
    "cloud": {"density_cm3": [2.2e10], "path_length_mm": 0.52},
    "model": {"kind": "pair", "v": [0.0]},
    "montecarlo": {
        "atom_count": 10000,
        "ion_fractions": [0.0],
        "realizations": 32,
        "seed": 0,
        "fit_window": 8.0,
        "per_realization_fits": True,
    },
    "nonlinearity": {"fit_chi3": False, "cutoff_omega_p": 0.7, "degenerate_kerr": False},
    "fit": {},
    "numerics": {
        "quad_nodes": 201,
        "r_min": 0.5,
        "tail_mass": 1e-6,
        "quad_rtol": 5e-3,
        "residual_tol": 1e-9,
        "trace_tol": 1e-10,
        "hermiticity_tol": 1e-10,
        "max_condition": 1e14,
    },
    "output": {"dir": "out"},
}

# Values not fixed by the experiment; reported in every sidecar.
ASSUMED = {
    "atom.gamma_e": "Rb 5P3/2 natural linewidth",
    "atom.dipole": "null means derived from the resonant cross-section 3 lambda^2/2pi",
    "state.c6": "chosen so the blockade radius is 4 um (48S, 2 MHz) or 3 um (42S, 2.5 MHz)",
    "lasers.delta_c": "coupling laser on resonance",
    "montecarlo.geometry": "uniform sphere; analysis inside half radius; microfield from ions within half radius",
    "numerics.r_min": "lower cutoff of the nearest-neighbour quadrature (um)",
    "numerics.quad_nodes": "log-spaced nodes of the nearest-neighbour quadrature",
}


class ConfigError(ValueError):
    pass


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-10``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+][0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def parse_document(text: str):
    return yaml.load(text, Loader=_Loader)


def _schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    text = resources.files(__package__).joinpath("presets", f"{name}.yaml").read_text()
    return parse_document(text)


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def validate(raw: dict) -> None:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            where = ".".join(str(p) for p in err.absolute_path) or "<root>"
            lines.append(f"{where}: {err.message}")
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))


def load_config(path: str | Path | None = None, preset: str | None = None, allow_empty: bool = False) -> dict:
    """Merge defaults, an optional preset and an optional YAML/JSON file; validate the result.

    A run sidecar is accepted as ``path``: its embedded ``config`` is used.
    """
    if path is None and preset is None and not allow_empty:
        raise ConfigError("give --config, --preset or both")
    raw: dict = {}
    if preset is not None:
        raw = load_preset(preset)
    if path is not None:
        try:
            user = parse_document(Path(path).read_text(encoding="utf-8")) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"config {path} must be a mapping")
        if "command" in user and isinstance(user.get("config"), dict):
            user = user["config"]
        raw = deep_merge(raw, user)
    validate(raw)
    resolved = deep_merge(DEFAULTS, raw)
    validate(resolved)
    return resolved


def grid_values(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["num"])
    return np.asarray(spec, dtype=float)


@dataclass(frozen=True)
class RunSetup:
    """Model objects resolved from a validated configuration."""

    state: RydbergState
    lasers: LaserParams
    atom: AtomParams
    densities: np.ndarray  # m^-3
    path_length: float  # m
    omega_p: np.ndarray
    delta_p: np.ndarray
    settings: NumericalSettings

    def cloud(self, density: float) -> CloudParams:
        return CloudParams(density=density, path_length=self.path_length, wavevector=self.atom.wavevector)


def resolve(cfg: dict) -> RunSetup:
    state_cfg = cfg["state"]
    if isinstance(state_cfg, str):
        state = STATES[state_cfg]
    else:
        state = RydbergState(n=state_cfg["n"], c6=state_cfg["c6"], lifetime=state_cfg["lifetime"],
                             alpha0=state_cfg.get("alpha0", 0.0))
    las = cfg["lasers"]
    omega_p = grid_values(las["omega_p"])
    delta_p = grid_values(las["delta_p"])
    if np.any(omega_p <= 0):
        raise ConfigError("lasers.omega_p: probe Rabi frequencies must be positive")
    if delta_p.size > 1 and not np.all(np.diff(delta_p) > 0):
        raise ConfigError("lasers.delta_p: detuning grid must be strictly increasing")
    lasers = LaserParams(omega_p=float(omega_p[0]), omega_c=las["omega_c"], delta_p=0.0,
                         delta_c=las["delta_c"], gamma_p=las["gamma_p"], gamma_rel=las["gamma_rel"])
    at = cfg["atom"]
    atom = AtomParams(gamma_e=at["gamma_e"], rydberg_lifetime=state.lifetime,
                      wavelength=at["wavelength"], dipole=at["dipole"])
    num = cfg["numerics"]
    settings = NumericalSettings(
        hermiticity_tol=num["hermiticity_tol"], trace_tol=num["trace_tol"],
        residual_tol=num["residual_tol"], max_condition=num["max_condition"],
        quad_nodes=num["quad_nodes"], r_min=num["r_min"], tail_mass=num["tail_mass"],
        quad_rtol=num["quad_rtol"],
    )
    if settings.quad_nodes % 2 == 0:
        raise ConfigError("numerics.quad_nodes must be odd")
    return RunSetup(
        state=state,
        lasers=lasers,
        atom=atom,
        densities=np.asarray(cfg["cloud"]["density_cm3"], dtype=float) * 1e6,
        path_length=cfg["cloud"]["path_length_mm"] * 1e-3,
        omega_p=omega_p,
        delta_p=delta_p,
        settings=settings,
    )


def assumed_values(cfg: dict) -> dict:
    out = {}
    for key, why in ASSUMED.items():
        section, _, name = key.partition(".")
        node = cfg.get(section)
        if section == "state":
            state = STATES.get(node) if isinstance(node, str) else None
            value = state.c6 if state is not None else (node or {}).get(name)
        elif isinstance(node, dict) and name in node:
            value = node[name]
        else:
            value = None
        out[key] = {"value": value, "reason": why}
    return out
