"""``sim`` command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import ConfigError, assumed_values, load_config, resolve
from .ensemble import ensemble_susceptibility
from .fitting import fit_chi3, fit_density
from .ions import CoincidentChargeError, fit_peak_shift, ion_spectrum, sample_shifts
from .numerics import solver_audit
from .optics import rabi_to_field
from .pair import pair_susceptibility, single_atom_susceptibility
from .parallel import pmap
from .spectra import sweep_spectrum

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class InputError(ValueError):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _tag(x: float) -> str:
    return f"{x:g}".replace("+", "")


class Run:
    """Bookkeeping for one command: output directory, stage timings and the sidecar."""

    def __init__(self, command: str, cfg: dict, out_dir: Path, jobs: int):
        self.command = command
        self.cfg = cfg
        self.out = out_dir
        self.jobs = jobs
        self.timings: dict[str, float] = {}
        self.outputs: list[str] = []
        self.out.mkdir(parents=True, exist_ok=True)

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def write_json(self, name: str, payload) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p

    def write_table(self, name: str, header, rows) -> Path:
        p = self.path(name)
        with p.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) for v in row])
        return p

    def finish(self, audit, extra=None):
        side = {
            "command": self.command,
            "version": _version(),
            "seed": self.cfg["montecarlo"]["seed"],
            "config": self.cfg,
            "assumed": assumed_values(self.cfg),
            "timings_s": self.timings,
            "outputs": list(self.outputs),
            "solver_audit": audit.as_dict(),
        }
        if extra:
            side.update(extra)
        (self.out / f"{self.command}_sidecar.json").write_text(
            json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def cmd_spectrum(run: Run) -> None:
    setup = resolve(run.cfg)
    model = run.cfg["model"]["kind"]
    if model == "ion-mc":
        raise ConfigError("model.kind ion-mc is computed by the 'ionmc' command")
    vs = run.cfg["model"]["v"] if model == "pair" else [0.0]
    for density in setup.densities:
        cloud = setup.cloud(density)
        for omega_p in setup.omega_p:
            lasers = replace(setup.lasers, omega_p=float(omega_p))
            for v in vs:
                with run.stage("sweep"):
                    spec = sweep_spectrum(model, lasers, setup.atom, cloud, setup.delta_p, v=v,
                                          state=setup.state, settings=setup.settings, jobs=run.jobs)
                name = f"spectrum_{model}_op{_tag(omega_p)}"
                if model == "pair":
                    name += f"_v{_tag(v)}"
                name += f"_n{_tag(density * 1e-6)}.csv"
                with run.stage("write"):
                    spec.write_csv(run.path(name))


def cmd_nonlinearity(run: Run) -> None:
    setup = resolve(run.cfg)
    model = run.cfg["model"]["kind"]
    if model == "ion-mc":
        raise ConfigError("nonlinearity supports model.kind single, pair or ensemble")
    v = run.cfg["model"]["v"][0]
    detuning = float(setup.delta_p[0])
    dipole = setup.atom.dipole_moment
    points = [(n, w) for n in setup.densities for w in setup.omega_p]

    def evaluate(point):
        density, omega_p = point
        lasers = replace(setup.lasers, omega_p=float(omega_p), delta_p=detuning)
        cloud = setup.cloud(density)
        if model == "ensemble":
            return ensemble_susceptibility(lasers, setup.atom, setup.state, cloud, setup.settings).value
        if model == "pair":
            return pair_susceptibility(lasers, setup.atom, v, density, setup.settings).value
        return single_atom_susceptibility(lasers, setup.atom, density, settings=setup.settings).value

    with run.stage("solve"):
        chi = np.array(pmap(evaluate, points, run.jobs), dtype=complex)
    fields = rabi_to_field(np.array([w for _, w in points]), dipole)
    rows = [(n * 1e-6, w, e, c.real, c.imag, c.imag / n) for (n, w), e, c in zip(points, fields, chi)]
    with run.stage("write"):
        run.write_table(
            "nonlinearity.csv",
            ["density_cm3", "omega_p_MHz", "field_V_per_m", "chi_real", "chi_imag", "chi_imag_per_N"],
            rows,
        )
    nl = run.cfg["nonlinearity"]
    if not nl["fit_chi3"]:
        return
    cutoff = float(rabi_to_field(nl["cutoff_omega_p"], dipole))
    report = []
    with run.stage("fit"):
        for density in setup.densities:
            sel = [i for i, (n, _) in enumerate(points) if n == density]
            fit = fit_chi3(fields[sel], chi.imag[sel], cutoff, nl["degenerate_kerr"])
            report.append({"density_cm3": density * 1e-6, **fit.as_dict()})
    run.write_json("chi3_fit.json", report)


def cmd_ionmc(run: Run) -> None:
    setup = resolve(run.cfg)
    mc = run.cfg["montecarlo"]
    if setup.state.alpha0 == 0:
        raise ConfigError("state.alpha0 must be non-zero for the ion Monte Carlo")
    jobs = []
    for density in setup.densities:
        for omega_p in setup.omega_p:
            for frac in mc["ion_fractions"]:
                jobs.append((density, float(omega_p), float(frac)))

    def evaluate(job):
        density, omega_p, frac = job
        cloud = setup.cloud(density)
        lasers = replace(setup.lasers, omega_p=omega_p)
        shifts = sample_shifts(cloud.density_um3, mc["atom_count"], frac, setup.state.alpha0,
                               mc["realizations"], mc["seed"])
        total, parts = ion_spectrum(lasers, setup.atom, shifts, setup.delta_p, cloud, setup.settings,
                                    per_realization=True)
        peak = fit_peak_shift(total, lasers, setup.atom, cloud, mc["fit_window"], setup.settings)
        summary = {
            "density_cm3": density * 1e-6,
            "omega_p_MHz": omega_p,
            "ion_fraction": frac,
            "analysed_atoms": int(shifts.shifts.size),
            "excluded_atoms": shifts.excluded,
            "median_stark_shift_MHz": float(np.median(shifts.shifts)) if shifts.shifts.size else 0.0,
            "peak": peak.as_dict(),
        }
        if mc["per_realization_fits"]:
            per = [fit_peak_shift(p, lasers, setup.atom, cloud, mc["fit_window"], setup.settings).shift
                   for p in parts]
            summary["per_realization_shift_MHz"] = per
            summary["shift_scatter_MHz"] = float(np.std(per, ddof=1)) if len(per) > 1 else None
            summary["shift_standard_error_MHz"] = (
                float(np.std(per, ddof=1) / np.sqrt(len(per))) if len(per) > 1 else None
            )
        return total, summary

    with run.stage("montecarlo"):
        results = pmap(evaluate, jobs, run.jobs)
    summaries = []
    with run.stage("write"):
        for (density, omega_p, frac), (spec, summary) in zip(jobs, results):
            name = f"ionmc_op{_tag(omega_p)}_f{_tag(frac)}_n{_tag(density * 1e-6)}.csv"
            spec.write_csv(run.path(name))
            summary["spectrum"] = name
            summaries.append(summary)
        run.write_json("ionmc_summary.json", summaries)


def read_transmission_csv(path: Path):
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = reader.fieldnames or []
            for col in ("delta_MHz", "transmission"):
                if col not in fields:
                    raise InputError(f"{path}: missing column {col!r} (found {fields})")
            delta, trans = [], []
            for line, row in enumerate(reader, start=2):
                try:
                    delta.append(float(row["delta_MHz"]))
                    trans.append(float(row["transmission"]))
                except (TypeError, ValueError) as exc:
                    raise InputError(f"{path}:{line}: malformed row {row}") from exc
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not UTF-8 text") from exc
    if len(delta) < 4:
        raise InputError(f"{path}: need at least 4 data rows, got {len(delta)}")
    return np.array(delta), np.array(trans)


def cmd_fit(run: Run, input_path: Path) -> None:
    setup = resolve(run.cfg)
    delta, trans = read_transmission_csv(input_path)
    linewidth = run.cfg["fit"].get("linewidth", setup.atom.gamma_e)
    try:
        with run.stage("fit"):
            fit = fit_density(delta, trans, setup.path_length, setup.atom.wavevector, linewidth)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report = {"input": str(input_path), "linewidth_MHz": linewidth, "points": int(delta.size), **fit.as_dict()}
    run.write_json("fit_report.json", report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="Rydberg EIT pair-model simulations")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("spectrum", "susceptibility and transmission against probe detuning"),
        ("nonlinearity", "susceptibility against probe Rabi frequency and density"),
        ("ionmc", "ion Stark-shift Monte Carlo spectra"),
        ("fit", "fit density to a coupling-off transmission spectrum"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="YAML or JSON run configuration (or a sidecar)")
        p.add_argument("--preset", help="shipped preset: fig2, fig3a, fig4 or fig5")
        p.add_argument("--out", type=Path, help="output directory (env SIM_OUT_DIR)")
        p.add_argument("--seed", type=int, help="Monte Carlo seed, 0 <= seed < 2**64")
        p.add_argument("--jobs", type=int, help="worker threads (env SIM_JOBS)")
        if name == "fit":
            p.add_argument("--input", type=Path, required=True, help="CSV with delta_MHz, transmission")
    return parser


def _settings(args, cfg: dict) -> tuple[Path, int]:
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must lie in [0, 2**64)")
        cfg["montecarlo"]["seed"] = args.seed
    out = args.out or os.environ.get("SIM_OUT_DIR") or cfg["output"]["dir"]
    cfg["output"]["dir"] = str(out)
    jobs = args.jobs
    if jobs is None:
        env = os.environ.get("SIM_JOBS")
        try:
            jobs = int(env) if env else 1
        except ValueError as exc:
            raise ConfigError(f"SIM_JOBS must be an integer, got {env!r}") from exc
    if jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return Path(out), jobs


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fit" and args.config is None and args.preset is None:
            cfg = load_config(allow_empty=True)
        else:
            cfg = load_config(args.config, args.preset)
        out, jobs = _settings(args, cfg)
        run = Run(args.command, cfg, out, jobs)
        with solver_audit() as audit:
            if args.command == "spectrum":
                cmd_spectrum(run)
            elif args.command == "nonlinearity":
                cmd_nonlinearity(run)
            elif args.command == "ionmc":
                cmd_ionmc(run)
            else:
                cmd_fit(run, args.input)
        run.finish(audit)
    except (ConfigError, InputError) as exc:
        print(f"sim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, CoincidentChargeError, np.linalg.LinAlgError) as exc:
        print(f"sim {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"sim {args.command}: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
