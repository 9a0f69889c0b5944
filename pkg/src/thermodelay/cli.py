"""Batch front end: JSON run specs, one subcommand per experiment class,
deterministic CSV/JSON artifacts with figures rendered alongside.

Config precedence: built-in defaults < config file < command-line flags.
The effective spec is echoed to run_spec.json in the output directory and
parses back to the same spec.  Exit codes: 0 success, 2 validation failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import figures
from .coercivity import (
    PhysicalParams,
    coercivity_grid,
    coercivity_scan,
    derived_constants,
    stability_condition,
)
from .errors import NoDecayDataError, NumericalError, ValidationError
from .generator import assemble, dump_coordinate
from .grid import StateVector, ThetaBC, build_grid, h_norm_sq, save_snapshot
from .spectral import log_spaced_scan_grid, resolvent_scan, spectrum_report, stability_sweep
from .timestepper import (
    InitialData,
    Scheme,
    dissipation_residual,
    fit_decay,
    simulate,
)

__all__ = ["RunSpec", "parse_config", "run", "main"]

COMMANDS = ("simulate", "spectrum", "resolvent", "coercivity", "sweep", "dissipation-audit")

_PARAM_KEYS = ("alpha", "beta", "gamma", "kappa", "tau", "ell")

_COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "simulate": {
        "T": 20.0,
        "dt": 1e-3,
        "scheme": "implicit_euler",
        "preset": "sine:1",
        "sample_stride": 1,
        "snapshot_times": [],
        "snapshot_format": "json",
        "dump_matrix": False,
    },
    "spectrum": {"deflate": True, "zero_tol": None, "dump_matrix": False},
    "resolvent": {"s": 1e-2, "b_min": 1.0, "b_max": 200.0, "b_count": 60, "dump_matrix": False},
    "coercivity": {
        "a_min": 0.01,
        "a_max": 5.0,
        "b_min": -50.0,
        "b_max": 50.0,
        "n_a": 100,
        "n_b": 1000,
    },
    "sweep": {"axis": None, "deflate": True},
    "dissipation-audit": {"n_states": 200, "dump_matrix": False},
}

_GRID_DEFAULTS = {"N": 64, "M": 32}


@dataclass
class RunSpec:
    """Fully validated description of one CLI run."""

    command: str
    params: PhysicalParams
    n_cells: int
    n_rho: int
    theta_bc: ThetaBC
    seed: int | None
    options: dict[str, Any]
    out_dir: Path | None = field(default=None, compare=False)
    force: bool = field(default=False, compare=False)


def _nest_dotted(doc: dict[str, Any]) -> dict[str, Any]:
    """Expand dotted keys ('params.alpha') into nested dicts, merging."""
    out: dict[str, Any] = {}
    for key, value in doc.items():
        parts = str(key).split(".")
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationError(f"config key {key!r} conflicts with a scalar value")
        leaf = parts[-1]
        if isinstance(value, dict) and isinstance(node.get(leaf), dict):
            node[leaf].update(value)
        else:
            node[leaf] = value
    return out


def parse_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> RunSpec:
    """Build a RunSpec from a JSON config file plus flag overrides.

    Unknown keys are errors, not ignored; every violated invariant is
    collected and reported in a single aggregated message with field paths.
    """
    doc: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError(f"config file {path} must contain a JSON object")
        doc = _nest_dotted(loaded)
    if overrides:
        for key, value in _nest_dotted(overrides).items():
            if isinstance(value, dict) and isinstance(doc.get(key), dict):
                doc[key].update(value)
            else:
                doc[key] = value

    errors: list[str] = []

    command = doc.pop("command", None)
    if command not in COMMANDS:
        errors.append(f"command: expected one of {COMMANDS}, got {command!r}")
        command = None

    params = None
    params_doc = doc.pop("params", None)
    if not isinstance(params_doc, dict):
        errors.append("params: required object with keys " + ", ".join(_PARAM_KEYS))
    else:
        unknown = set(params_doc) - set(_PARAM_KEYS)
        for key in sorted(unknown):
            errors.append(f"params.{key}: unknown key")
        missing = [k for k in _PARAM_KEYS if k not in params_doc]
        if missing:
            errors.append("params: missing " + ", ".join(missing))
        elif not unknown:
            try:
                params = PhysicalParams(**{k: params_doc[k] for k in _PARAM_KEYS})
            except ValidationError as exc:
                errors.append(str(exc))

    grid_doc = doc.pop("grid", {})
    n_cells, n_rho = _GRID_DEFAULTS["N"], _GRID_DEFAULTS["M"]
    if not isinstance(grid_doc, dict):
        errors.append("grid: must be an object with keys N, M")
    else:
        unknown = set(grid_doc) - {"N", "M"}
        for key in sorted(unknown):
            errors.append(f"grid.{key}: unknown key")
        try:
            n_cells = int(grid_doc.get("N", n_cells))
            n_rho = int(grid_doc.get("M", n_rho))
        except (TypeError, ValueError):
            errors.append("grid.N, grid.M: must be integers")
        else:
            if n_cells < 2:
                errors.append(f"grid.N: must be >= 2, got {n_cells}")
            if n_rho < 1:
                errors.append(f"grid.M: must be >= 1, got {n_rho}")

    theta_bc = ThetaBC.NEUMANN
    raw_bc = doc.pop("theta_bc", "neumann")
    try:
        theta_bc = ThetaBC(raw_bc)
    except ValueError:
        errors.append(f"theta_bc: expected 'neumann' or 'dirichlet', got {raw_bc!r}")

    seed = doc.pop("seed", None)
    if seed is not None:
        try:
            seed = int(seed)
        except (TypeError, ValueError):
            errors.append(f"seed: must be an integer, got {seed!r}")
            seed = None

    out_dir = doc.pop("out", None)
    if out_dir is not None:
        out_dir = Path(str(out_dir))

    options: dict[str, Any] = {}
    if command is not None:
        options = dict(_COMMAND_DEFAULTS[command])
        for key in list(doc):
            if key in options:
                options[key] = doc.pop(key)
        _validate_options(command, options, seed, errors)
    for key in sorted(doc):
        errors.append(f"{key}: unknown key")

    if errors:
        raise ValidationError("invalid run spec:\n  " + "\n  ".join(errors))
    return RunSpec(
        command=command,
        params=params,
        n_cells=n_cells,
        n_rho=n_rho,
        theta_bc=theta_bc,
        seed=seed,
        options=options,
        out_dir=out_dir,
    )


def _preset_error(preset) -> str:
    """Empty string if the preset parses, else the validation message."""
    parts = str(preset).split(":")
    if parts == ["random"]:
        return ""
    if parts[0] == "sine" and len(parts) <= 2:
        try:
            if (int(parts[1]) if len(parts) == 2 else 1) >= 1:
                return ""
        except ValueError:
            pass
    return f"preset: expected 'sine:<k>' or 'random', got {preset!r}"


def _validate_options(
    command: str, options: dict[str, Any], seed: int | None, errors: list[str]
) -> None:
    def positive(key: str) -> None:
        try:
            value = float(options[key])
        except (TypeError, ValueError):
            errors.append(f"{key}: must be a number, got {options[key]!r}")
            return
        if not value > 0:
            errors.append(f"{key}: must be > 0, got {options[key]!r}")
        options[key] = value

    def count(key: str, minimum: int) -> None:
        try:
            value = int(options[key])
        except (TypeError, ValueError):
            errors.append(f"{key}: must be an integer, got {options[key]!r}")
            return
        if value < minimum:
            errors.append(f"{key}: must be >= {minimum}, got {value}")
        options[key] = value

    if command == "simulate":
        positive("T")
        positive("dt")
        count("sample_stride", 1)
        try:
            options["scheme"] = Scheme(options["scheme"]).value
        except ValueError:
            errors.append(f"scheme: expected one of {[s.value for s in Scheme]}")
        msg = _preset_error(options["preset"])
        if msg:
            errors.append(msg)
        if str(options["preset"]) == "random" and seed is None:
            errors.append("seed: required for the random initial-data preset")
        if options["snapshot_format"] not in ("json", "binary"):
            errors.append(f"snapshot_format: expected 'json' or 'binary', got {options['snapshot_format']!r}")
        try:
            options["snapshot_times"] = [float(t) for t in options["snapshot_times"]]
        except (TypeError, ValueError):
            errors.append("snapshot_times: must be a list of numbers")
    elif command == "spectrum":
        if options["zero_tol"] is not None:
            positive("zero_tol")
    elif command == "resolvent":
        positive("s")
        positive("b_min")
        positive("b_max")
        count("b_count", 2)
        if isinstance(options["b_count"], int) and options["b_count"] % 2:
            errors.append(f"b_count: must be even (symmetric ± grid), got {options['b_count']}")
        if (
            isinstance(options["b_min"], float)
            and isinstance(options["b_max"], float)
            and not options["b_min"] < options["b_max"]
        ):
            errors.append("b_min, b_max: need b_min < b_max")
    elif command == "coercivity":
        positive("a_min")
        positive("a_max")
        count("n_a", 1)
        count("n_b", 1)
        for key in ("b_min", "b_max"):
            try:
                options[key] = float(options[key])
            except (TypeError, ValueError):
                errors.append(f"{key}: must be a number, got {options[key]!r}")
        if (
            isinstance(options["a_min"], float)
            and isinstance(options["a_max"], float)
            and not options["a_min"] <= options["a_max"]
        ):
            errors.append("a_min, a_max: need a_min <= a_max")
        if (
            isinstance(options["b_min"], float)
            and isinstance(options["b_max"], float)
            and not options["b_min"] <= options["b_max"]
        ):
            errors.append("b_min, b_max: need b_min <= b_max")
    elif command == "sweep":
        axis = options["axis"]
        if not isinstance(axis, dict) or set(axis) != {"param", "values"}:
            errors.append("axis: required object {param, values}")
        else:
            if axis["param"] not in ("alpha", "beta", "gamma", "kappa", "tau", "ell", "ratio"):
                errors.append(f"axis.param: unknown sweep parameter {axis['param']!r}")
            try:
                values = [float(v) for v in axis["values"]]
                if not values:
                    errors.append("axis.values: needs at least one point")
                axis["values"] = values
            except (TypeError, ValueError):
                errors.append("axis.values: must be a list of numbers")
    elif command == "dissipation-audit":
        count("n_states", 1)
        if seed is None:
            errors.append("seed: required for the randomized dissipation audit")


def echo_dict(spec: RunSpec) -> dict[str, Any]:
    """Canonical JSON form of a spec; parses back to an equal RunSpec."""
    doc: dict[str, Any] = {
        "command": spec.command,
        "params": {k: getattr(spec.params, k) for k in _PARAM_KEYS},
        "grid": {"N": spec.n_cells, "M": spec.n_rho},
        "theta_bc": spec.theta_bc.value,
        "seed": spec.seed,
    }
    doc.update(spec.options)
    return doc


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    lines = [",".join(header)] + [",".join(row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_summary(out: Path, summary: dict[str, Any]) -> None:
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _initial_data(spec: RunSpec) -> InitialData:
    preset = str(spec.options["preset"])
    if preset == "random":
        return InitialData.random_smooth(spec.seed)
    parts = preset.split(":")
    return InitialData.sine_mode(int(parts[1]) if len(parts) > 1 else 1)


def _random_state(rng: np.random.Generator, g) -> StateVector:
    def draw(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return StateVector(
        u=draw(g.n_interior),
        v=draw(g.n_interior),
        z=draw(g.n_cells, g.n_rho),
        theta=draw(g.n_cells),
    )


def _run_simulate(spec: RunSpec, out: Path, summary: dict[str, Any]) -> None:
    opts = spec.options
    g = build_grid(spec.n_cells, spec.n_rho, spec.params.ell)
    init = _initial_data(spec)
    traj = simulate(
        spec.params,
        g,
        init,
        T=opts["T"],
        dt=opts["dt"],
        scheme=Scheme(opts["scheme"]),
        sample_stride=opts["sample_stride"],
        theta_bc=spec.theta_bc,
        snapshot_times=opts["snapshot_times"] or None,
    )
    rows = [
        [_fmt(t), _fmt(e), _fmt(np.sqrt(max(e, 0.0)))]
        for t, e in zip(traj.times, traj.energies)
    ]
    _write_csv(out / "energy.csv", ["t", "E", "sqrtE"], rows)
    ext = "json" if opts["snapshot_format"] == "json" else "bin"
    for i, (t, state) in enumerate(traj.snapshots):
        save_snapshot(out / f"snapshot_{i:04d}.{ext}", state, g, fmt=opts["snapshot_format"])
    if opts["dump_matrix"]:
        dump_coordinate(assemble(spec.params, g, spec.theta_bc), out / "matrix.txt")
    try:
        fit = fit_decay(traj)
    except NoDecayDataError as exc:
        fit = None
        summary["fit_note"] = str(exc)
    figures.energy_figure(traj, fit, out / "energy.png")
    e0, e_end = float(traj.energies[0]), float(traj.energies[-1])
    summary.update(
        {
            "E0": e0,
            "E_final": e_end,
            "energy_ratio": e_end / e0 if e0 > 0 else None,
            "w_fit": fit.w_fit if fit else None,
            "c_fit": fit.c_fit if fit else None,
            "r_squared": fit.r_squared if fit else None,
            "fit_window": list(fit.window) if fit else None,
            "snapshots": [t for t, _ in traj.snapshots],
        }
    )


def _run_spectrum(spec: RunSpec, out: Path, summary: dict[str, Any]) -> None:
    opts = spec.options
    g = build_grid(spec.n_cells, spec.n_rho, spec.params.ell)
    A = assemble(spec.params, g, spec.theta_bc)
    if opts["dump_matrix"]:
        dump_coordinate(A, out / "matrix.txt")
    report = spectrum_report(A, deflate_zero=opts["deflate"], zero_tol=opts["zero_tol"])
    rows = [[_fmt(w.real), _fmt(w.imag)] for w in report.eigenvalues]
    _write_csv(out / "spectrum.csv", ["re", "im"], rows)
    figures.spectrum_figure(report.eigenvalues, report.abscissa, out / "spectrum.png")
    summary.update(
        {
            "abscissa": report.abscissa,
            "zero_modes_removed": report.zero_modes_removed,
            "n_eigenvalues": int(report.eigenvalues.size),
            "spectral_radius": float(np.max(np.abs(report.eigenvalues))),
        }
    )


def _run_resolvent(spec: RunSpec, out: Path, summary: dict[str, Any]) -> None:
    opts = spec.options
    g = build_grid(spec.n_cells, spec.n_rho, spec.params.ell)
    A = assemble(spec.params, g, spec.theta_bc)
    if opts["dump_matrix"]:
        dump_coordinate(A, out / "matrix.txt")
    b_values = log_spaced_scan_grid(opts["b_min"], opts["b_max"], opts["b_count"])
    scan = resolvent_scan(A, opts["s"], b_values)
    rows = [
        [_fmt(b), _fmt(ne), _fmt(nh)]
        for b, ne, nh in zip(scan.b_values, scan.norm_euclid, scan.norm_h)
    ]
    _write_csv(out / "resolvent_scan.csv", ["b", "norm_euclid", "norm_H"], rows)
    figures.resolvent_figure(scan, out / "resolvent_scan.png")
    summary.update(
        {
            "s": scan.s,
            "sup_resolvent_norm_h": scan.sup_norm,
            "argmax_b": scan.argmax_b,
            "sup_resolvent_norm_euclid": float(np.max(scan.norm_euclid[~scan.singular]))
            if np.any(~scan.singular)
            else None,
            "n_singular": int(np.count_nonzero(scan.singular)),
            "singular_b": [float(b) for b in scan.b_values[scan.singular]],
        }
    )


def _run_coercivity(spec: RunSpec, out: Path, summary: dict[str, Any]) -> None:
    opts = spec.options
    a_range = (opts["a_min"], opts["a_max"])
    b_range = (opts["b_min"], opts["b_max"])
    report = coercivity_scan(spec.params, a_range, b_range, opts["n_a"], opts["n_b"])
    a, b, values = coercivity_grid(spec.params, a_range, b_range, opts["n_a"], opts["n_b"])
    figures.coercivity_figure(a, b, values, out / "coercivity.png")
    xi, m = derived_constants(spec.params)
    summary.update(
        {
            "min_coercivity": report.min_value,
            "argmin": [report.argmin.real, report.argmin.imag],
            "n_samples": report.n_samples,
            "nonpositive_count": report.nonpositive_count,
            "stability_condition": stability_condition(spec.params),
            "xi": xi,
            "m": m,
        }
    )


def _run_sweep(spec: RunSpec, out: Path, summary: dict[str, Any]) -> None:
    opts = spec.options
    g = build_grid(spec.n_cells, spec.n_rho, spec.params.ell)
    axis = opts["axis"]
    rows = stability_sweep(
        spec.params,
        axis["param"],
        axis["values"],
        g,
        deflate=opts["deflate"],
        theta_bc=spec.theta_bc,
    )
    csv_rows = [
        [_fmt(r.value), _fmt(r.abscissa) if r.abscissa is not None else "", r.status]
        for r in rows
    ]
    _write_csv(out / "sweep.csv", ["param", "abscissa", "status"], csv_rows)
    figures.sweep_figure(rows, out / "sweep.png")
    ok = [r.abscissa for r in rows if r.status == "ok"]
    summary.update(
        {
            "axis_param": axis["param"],
            "n_points": len(rows),
            "n_failed": sum(1 for r in rows if r.status != "ok"),
            "max_abscissa": max(ok) if ok else None,
            "min_abscissa": min(ok) if ok else None,
        }
    )


def _run_dissipation_audit(spec: RunSpec, out: Path, summary: dict[str, Any]) -> None:
    opts = spec.options
    g = build_grid(spec.n_cells, spec.n_rho, spec.params.ell)
    A = assemble(spec.params, g, spec.theta_bc)
    if opts["dump_matrix"]:
        dump_coordinate(A, out / "matrix.txt")
    rng = np.random.default_rng(spec.seed)
    relative = np.empty(opts["n_states"])
    for i in range(opts["n_states"]):
        U = _random_state(rng, g)
        norm_sq = h_norm_sq(U, spec.params, g)
        relative[i] = dissipation_residual(A, U, spec.params, g) / norm_sq
    figures.dissipation_figure(relative, out / "dissipation.png")
    tol = 1e-10
    summary.update(
        {
            "n_states": opts["n_states"],
            "max_relative_residual": float(np.max(relative)),
            "n_violations": int(np.count_nonzero(relative > tol)),
            "violation_tolerance": tol,
        }
    )


_RUNNERS = {
    "simulate": _run_simulate,
    "spectrum": _run_spectrum,
    "resolvent": _run_resolvent,
    "coercivity": _run_coercivity,
    "sweep": _run_sweep,
    "dissipation-audit": _run_dissipation_audit,
}


def run(spec: RunSpec) -> int:
    """Execute a validated spec; writes artifacts, returns the exit code."""
    if spec.out_dir is None:
        raise ValidationError("output directory required (--out or config key 'out')")
    out = Path(spec.out_dir)
    if out.exists() and any(out.iterdir()) and not spec.force:
        raise ValidationError(f"output directory {out} is not empty (pass --force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_spec.json").write_text(json.dumps(echo_dict(spec), indent=2, sort_keys=True) + "\n")
    summary: dict[str, Any] = {
        "command": spec.command,
        "status": "ok",
        "grid": {"N": spec.n_cells, "M": spec.n_rho},
        "theta_bc": spec.theta_bc.value,
        "params": {k: getattr(spec.params, k) for k in _PARAM_KEYS},
        "seed": spec.seed,
    }
    try:
        _RUNNERS[spec.command](spec, out, summary)
    except NumericalError as exc:
        summary["status"] = "numerical-failure"
        summary["error"] = str(exc)
        _write_summary(out, summary)
        return 3
    _write_summary(out, summary)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermodelay",
        description="Delayed thermoelastic system with Kelvin-Voigt damping: "
        "stability experiments and reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON run spec")
        p.add_argument("--out", help="output directory (must be empty unless --force)")
        p.add_argument("--force", action="store_true", help="allow writing into a non-empty directory")
        p.add_argument("--seed", type=int, help="seed for randomized audits/presets")
        p.add_argument("--N", type=int, dest="grid_n", help="space cells")
        p.add_argument("--M", type=int, dest="grid_m", help="delay cells")
        p.add_argument("--theta-bc", choices=["neumann", "dirichlet"], help="temperature walls")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config key (dotted paths, JSON values)",
        )

    p = sub.add_parser("simulate", help="time integration and decay fit")
    common(p)
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--preset", help="initial data: sine:<k> or random")
    p.add_argument("--sample-stride", type=int, dest="sample_stride")
    p.add_argument("--snapshot-at", dest="snapshot_at", help="comma-separated times")
    p.add_argument("--snapshot-format", dest="snapshot_format", choices=["json", "binary"])
    p.add_argument("--dump-matrix", dest="dump_matrix", action="store_true", default=None)

    p = sub.add_parser("spectrum", help="dense eigensolve and deflated abscissa")
    common(p)
    p.add_argument("--zero-tol", type=float, dest="zero_tol")
    p.add_argument("--deflate", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--dump-matrix", dest="dump_matrix", action="store_true", default=None)

    p = sub.add_parser("resolvent", help="resolvent-norm scan along Re(lam) = s")
    common(p)
    p.add_argument("--s", type=float, help="real part of the scan line")
    p.add_argument("--b-min", type=float, dest="b_min")
    p.add_argument("--b-max", type=float, dest="b_max")
    p.add_argument("--b-count", type=int, dest="b_count")
    p.add_argument("--dump-matrix", dest="dump_matrix", action="store_true", default=None)

    p = sub.add_parser("coercivity", help="grid audit of the coercivity function")
    common(p)
    p.add_argument("--a-min", type=float, dest="a_min")
    p.add_argument("--a-max", type=float, dest="a_max")
    p.add_argument("--b-min", type=float, dest="b_min")
    p.add_argument("--b-max", type=float, dest="b_max")
    p.add_argument("--n-a", type=int, dest="n_a")
    p.add_argument("--n-b", type=int, dest="n_b")

    p = sub.add_parser("sweep", help="abscissa along one parameter axis")
    common(p)
    p.add_argument("--axis", help="axis spec, e.g. beta:0.5,1,2 or ratio:1,2,4")
    p.add_argument("--deflate", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("dissipation-audit", help="randomized dissipation-inequality audit")
    common(p)
    p.add_argument("--n-states", type=int, dest="n_states")
    p.add_argument("--dump-matrix", dest="dump_matrix", action="store_true", default=None)

    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    over: dict[str, Any] = {"command": args.command}
    mapping = {
        "seed": "seed",
        "grid_n": "grid.N",
        "grid_m": "grid.M",
        "theta_bc": "theta_bc",
        "T": "T",
        "dt": "dt",
        "scheme": "scheme",
        "preset": "preset",
        "sample_stride": "sample_stride",
        "snapshot_format": "snapshot_format",
        "dump_matrix": "dump_matrix",
        "zero_tol": "zero_tol",
        "deflate": "deflate",
        "s": "s",
        "b_min": "b_min",
        "b_max": "b_max",
        "b_count": "b_count",
        "a_min": "a_min",
        "a_max": "a_max",
        "n_a": "n_a",
        "n_b": "n_b",
        "n_states": "n_states",
    }
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            over[key] = value
    if getattr(args, "snapshot_at", None):
        try:
            over["snapshot_times"] = [float(t) for t in args.snapshot_at.split(",")]
        except ValueError:
            raise ValidationError(f"--snapshot-at: expected comma-separated numbers, got {args.snapshot_at!r}")
    if getattr(args, "axis", None):
        over["axis"] = _parse_axis_flag(args.axis)
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            over[key] = json.loads(raw)
        except json.JSONDecodeError:
            over[key] = raw
    return over


def _parse_axis_flag(text: str) -> dict[str, Any]:
    param, _, tail = str(text).partition(":")
    try:
        values = [float(v) for v in tail.split(",") if v != ""]
    except ValueError:
        values = []
    if not param or not values:
        raise ValidationError(f"--axis: expected '<param>:<v1,v2,...>', got {text!r}")
    return {"param": param, "values": values}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        overrides = _overrides_from_args(args)
        spec = parse_config(args.config, overrides)
        if args.out is not None:
            spec.out_dir = Path(args.out)
        spec.force = bool(args.force)
        return run(spec)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
