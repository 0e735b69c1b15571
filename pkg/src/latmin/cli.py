"""Command line entry points: solve, sweep, decompose, verify.

Each subcommand validates its configuration, dispatches into the library, and
writes a JSON report (plus CSV solution dumps and optional PNG figures) whose
bytes depend only on config and seed.  Exit codes: 0 success, 2 configuration
error, 3 non-convergence or failed checks (a partial report is still written),
4 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .coefficients import field_from_spec
from .decompose import (
    BubbleBudgetError,
    energy_identity_check,
    extract_bubbles,
    load_sequence,
    separation_check,
)
from .functionals import ProblemParams, j2
from .lattice import LatticeBox, LatticeFunction, write_function_csv
from .minimize import (
    beta_sweep,
    lambda_bounds,
    minimize_constrained,
    positivity_check,
)
from .checks import run_verification_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4

OUTPUT_DIR_ENV = "LATMIN_OUT_DIR"

SUBCOMMANDS = ("solve", "sweep", "decompose", "verify")


class ConfigError(ValueError):
    """Invalid run configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    """Resolved configuration of one run; echoed verbatim into the report."""

    subcommand: str
    dim: int = 2
    p: float = 2.0
    q: float = 4.0
    a: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    b: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    beta: float = 1.0
    betas: list | None = None
    radius: int = 8
    tol: float = 1e-8
    max_iter: int = 100_000
    seed: int = 0
    out: str | None = None
    solution_csv: str | None = None
    figures: bool = True
    manifest: str | None = None
    sigma: float | None = None
    window: int | None = None
    max_bubbles: int = 8
    energy_floor: float | None = None
    level: float | None = None
    trials: int = 1000

    def as_dict(self) -> dict:
        return asdict(self)

    def fingerprint(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


_KEYS_COMMON = {"dim", "p", "q", "a", "b", "seed", "out", "figures"}
_KEYS_BY_SUBCOMMAND = {
    "solve": _KEYS_COMMON | {"beta", "radius", "tol", "max_iter", "solution_csv"},
    "sweep": _KEYS_COMMON | {"betas", "radius", "tol", "max_iter"},
    "decompose": _KEYS_COMMON
    | {"beta", "manifest", "sigma", "window", "max_bubbles", "energy_floor", "level"},
    "verify": _KEYS_COMMON | {"trials"},
}


def build_config(subcommand: str, file_values: dict, flag_values: dict) -> RunConfig:
    """Merge config-file values and flags (flags win) into a validated RunConfig."""
    allowed = _KEYS_BY_SUBCOMMAND[subcommand]
    unknown = set(file_values) - allowed
    if unknown:
        raise ConfigError(
            f"unknown config keys for {subcommand!r}: {sorted(unknown)}"
        )
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})

    config = RunConfig(subcommand=subcommand)
    valid_fields = {f.name for f in fields(RunConfig)}
    for key, value in merged.items():
        if key not in valid_fields:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(config, key, value)

    try:
        _params_of(config)  # validates dim/p/q/beta/fields
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if config.subcommand == "sweep":
        if not config.betas:
            raise ConfigError("sweep requires a nonempty beta grid (--betas)")
        if any(b <= 0 for b in config.betas):
            raise ConfigError(f"all betas must be positive: {config.betas}")
    if config.subcommand == "decompose" and not config.manifest:
        raise ConfigError("decompose requires a sequence manifest (--manifest)")
    if config.radius < 1:
        raise ConfigError(f"radius must be >= 1, got {config.radius}")
    if config.tol <= 0:
        raise ConfigError(f"tol must be positive, got {config.tol}")
    if config.max_iter < 0:
        raise ConfigError(f"max_iter must be >= 0, got {config.max_iter}")
    return config


def _params_of(config: RunConfig) -> ProblemParams:
    return ProblemParams(
        dim=int(config.dim),
        p=float(config.p),
        q=float(config.q),
        a=field_from_spec(config.a),
        b=field_from_spec(config.b),
        beta=float(config.beta),
    )


def _default_out(config: RunConfig) -> Path:
    if config.out:
        return Path(config.out)
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / f"{config.subcommand}_report.json"


def emit_solution_csv(u: LatticeFunction, path) -> None:
    """CSV dump of a solution; surfaces I/O failures with the path attached."""
    try:
        write_function_csv(u, path)
    except OSError as exc:
        raise OSError(f"failed to write solution CSV {path}: {exc}") from exc


def report_bytes(report: dict, include_wall_time: bool = True) -> bytes:
    """Canonical serialization; wall time is the only nondeterministic field."""
    doc = dict(report)
    if not include_wall_time:
        doc.pop("wall_time_s", None)
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()


def write_report(report: dict, path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(report_bytes(report))
    except OSError as exc:
        raise OSError(f"failed to write report {path}: {exc}") from exc


def load_report(path) -> dict:
    with open(path, "rb") as fh:
        return json.loads(fh.read().decode())


# ---------------------------------------------------------------------------
# Subcommand runners: each returns (results dict, exit code)
# ---------------------------------------------------------------------------


def _run_solve(config: RunConfig, out_path: Path) -> tuple[dict, int]:
    params = _params_of(config)
    box = LatticeBox(params.dim, config.radius)
    result = minimize_constrained(
        params, box, tol=config.tol, max_iter=config.max_iter
    )
    lo, hi = lambda_bounds(params)

    csv_path = Path(config.solution_csv) if config.solution_csv else out_path.with_suffix(".csv")
    emit_solution_csv(result.u0, csv_path)

    figure_paths = []
    if config.figures:
        from .figures import render_solution

        fig_path = out_path.with_name(out_path.stem + "_solution.png")
        render_solution(result, params, fig_path)
        figure_paths.append(str(fig_path))

    results = {
        "lambda0": float(result.lambda0),
        "lambda": float(result.multiplier),
        "b_tilde": float(result.b_tilde),
        "residual": float(result.residual),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "lambda_bounds": [float(lo), float(hi)],
        "j2": float(j2(result.u0, params)),
        "positive_everywhere": positivity_check(result.u0),
        "site_count": int(box.site_count),
        "solution_csv": str(csv_path),
        "figures": figure_paths,
    }
    return results, EXIT_OK if result.converged else EXIT_NONCONVERGED


def _run_sweep(config: RunConfig, out_path: Path) -> tuple[dict, int]:
    params = _params_of(config)
    box = LatticeBox(params.dim, config.radius)
    rows = beta_sweep(
        params, [float(b) for b in config.betas], box,
        tol=config.tol, max_iter=config.max_iter,
    )

    figure_paths = []
    if config.figures:
        from .figures import render_sweep

        fig_path = out_path.with_name(out_path.stem + "_sweep.png")
        render_sweep(rows, fig_path)
        figure_paths.append(str(fig_path))

    results = {
        "rows": [
            {
                "beta": row.beta,
                "lambda0": row.lambda0,
                "lambda": row.multiplier,
                "b_tilde": row.b_tilde,
                "residual": row.residual,
                "iterations": row.iterations,
                "converged": row.converged,
                "b_bracket": [row.bracket[0], row.bracket[1]],
            }
            for row in rows
        ],
        "figures": figure_paths,
    }
    ok = all(row.converged for row in rows)
    return results, EXIT_OK if ok else EXIT_NONCONVERGED


def _decomposition_results(dec, params, config: RunConfig, out_path: Path) -> dict:
    level = config.level
    csv_paths = {}
    u0_path = out_path.with_name(out_path.stem + "_limit.csv")
    emit_solution_csv(dec.u0, u0_path)
    csv_paths["limit"] = str(u0_path)
    for i, bubble in enumerate(dec.bubbles):
        p = out_path.with_name(out_path.stem + f"_bubble{i+1}.csv")
        emit_solution_csv(bubble, p)
        csv_paths[f"bubble{i+1}"] = str(p)

    results = {
        "k": dec.k,
        "u0_energy": float(dec.u0_energy),
        "bubble_energies": [float(e) for e in dec.bubble_energies],
        "bubble_masses": [float(m) for m in dec.bubble_masses],
        "bubble_heights": [float(h) for h in dec.bubble_heights],
        "bubble_residuals": [float(r) for r in dec.bubble_residuals],
        "center_tracks": [[list(map(int, y)) for y in t] for t in dec.center_tracks],
        "remainder_sup": float(dec.remainder_sup),
        "sigma": float(dec.sigma),
        "separation_ok": separation_check(dec) if dec.k >= 1 else None,
        "energy_defect": (
            float(energy_identity_check(dec, params, level)) if level is not None else None
        ),
        "level": level,
        "unstable_sites": [list(map(int, s)) for s in dec.unstable_sites],
        "quantization_stop": bool(dec.quantization_stop),
        "csv": csv_paths,
    }
    if config.figures:
        from .figures import render_decomposition

        fig_path = out_path.with_name(out_path.stem + "_energies.png")
        render_decomposition(dec, level, fig_path)
        results["figures"] = [str(fig_path)]
    else:
        results["figures"] = []
    return results


def _run_decompose(config: RunConfig, out_path: Path) -> tuple[dict, int]:
    params = _params_of(config)
    try:
        seq = load_sequence(config.manifest)
    except FileNotFoundError as exc:
        raise OSError(f"cannot read sequence manifest {config.manifest}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if seq.dim != params.dim:
        raise ConfigError(f"manifest dimension {seq.dim} != configured dim {params.dim}")
    if config.level is None and seq.level is not None:
        config.level = float(seq.level)

    try:
        dec = extract_bubbles(
            seq,
            params,
            sigma=config.sigma,
            window=config.window,
            max_bubbles=config.max_bubbles,
            energy_floor=config.energy_floor,
        )
    except BubbleBudgetError as exc:
        results = _decomposition_results(exc.partial, params, config, out_path)
        results["error"] = str(exc)
        return results, EXIT_NONCONVERGED
    return _decomposition_results(dec, params, config, out_path), EXIT_OK


def _run_verify(config: RunConfig, out_path: Path) -> tuple[dict, int]:
    reports = run_verification_suite(seed=config.seed, random_trials=config.trials)
    figure_paths = []
    if config.figures:
        from .figures import render_checks

        fig_path = out_path.with_name(out_path.stem + "_checks.png")
        render_checks(reports, fig_path)
        figure_paths.append(str(fig_path))
    all_passed = all(r.passed for r in reports)
    results = {
        "checks": [r.as_dict() for r in reports],
        "all_passed": all_passed,
        "figures": figure_paths,
    }
    return results, EXIT_OK if all_passed else EXIT_NONCONVERGED


_RUNNERS = {
    "solve": _run_solve,
    "sweep": _run_sweep,
    "decompose": _run_decompose,
    "verify": _run_verify,
}


def run(config: RunConfig) -> tuple[dict, int]:
    """Execute a validated config; returns (report, exit code) and writes the report."""
    out_path = _default_out(config)
    start = time.perf_counter()
    results, code = _RUNNERS[config.subcommand](config, out_path)
    report = {
        "subcommand": config.subcommand,
        "config": _jsonable(config.as_dict()),
        "fingerprint": config.fingerprint(),
        "version": __version__,
        "results": _jsonable(results),
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    write_report(report, out_path)
    return report, code


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--dim", type=int, default=None, help="lattice dimension N >= 2")
    sub.add_argument("--p", type=float, default=None)
    sub.add_argument("--q", type=float, default=None)
    sub.add_argument("--a-const", type=float, default=None, help="constant a coefficient")
    sub.add_argument("--a-json", type=str, default=None, help="inline JSON spec for a")
    sub.add_argument("--b-const", type=float, default=None, help="constant b coefficient")
    sub.add_argument("--b-json", type=str, default=None, help="inline JSON spec for b")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--out", type=str, default=None, help="report path (JSON)")
    sub.add_argument("--config", type=str, default=None, help="JSON config file; flags win")
    sub.add_argument(
        "--no-figures", action="store_true", help="skip rendering PNG figures"
    )


def _field_flags(args, letter: str) -> dict | None:
    const = getattr(args, f"{letter}_const")
    inline = getattr(args, f"{letter}_json")
    if const is not None and inline is not None:
        raise ConfigError(f"--{letter}-const and --{letter}-json are mutually exclusive")
    if const is not None:
        return {"kind": "constant", "value": const}
    if inline is not None:
        try:
            return json.loads(inline)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON for --{letter}-json: {exc}") from exc
    return None


def _parse_betas(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid beta grid {text!r}: {exc}") from exc


def _flag_values(args) -> dict:
    values = {
        "dim": args.dim,
        "p": args.p,
        "q": args.q,
        "a": _field_flags(args, "a"),
        "b": _field_flags(args, "b"),
        "seed": args.seed,
        "out": args.out,
        "figures": False if args.no_figures else None,
    }
    for name in (
        "beta", "radius", "tol", "max_iter", "solution_csv",
        "manifest", "sigma", "window", "max_bubbles", "energy_floor",
        "level", "trials",
    ):
        if hasattr(args, name):
            values[name] = getattr(args, name)
    if getattr(args, "betas", None) is not None:
        values["betas"] = _parse_betas(args.betas)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latmin",
        description=(
            "Positive solutions of -Delta u + a|u|^(p-2)u - b|u|^(q-2)u = 0 on "
            "truncated lattice boxes: constrained minimization, beta sweeps, bubble "
            "decomposition of function sequences, and a numerical verification suite."
        ),
    )
    parser.add_argument("--version", action="version", version=f"latmin {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    sp = subparsers.add_parser("solve", help="minimize J1 on {J2 = 1} and report lambda, b")
    _add_common(sp)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--radius", type=int, default=None, help="truncation radius R")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    sp.add_argument("--solution-csv", dest="solution_csv", type=str, default=None)

    sp = subparsers.add_parser("sweep", help="solve across a beta grid")
    _add_common(sp)
    sp.add_argument("--betas", type=str, default=None, help="comma-separated grid, e.g. 0.1,1,10")
    sp.add_argument("--radius", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=None)

    sp = subparsers.add_parser("decompose", help="bubble-decompose a sequence manifest")
    _add_common(sp)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--manifest", type=str, default=None, help="sequence manifest JSON")
    sp.add_argument("--sigma", type=float, default=None, help="vanishing threshold")
    sp.add_argument("--window", type=int, default=None, help="pointwise-limit window radius")
    sp.add_argument("--max-bubbles", dest="max_bubbles", type=int, default=None)
    sp.add_argument("--energy-floor", dest="energy_floor", type=float, default=None)
    sp.add_argument("--level", type=float, default=None, help="target energy level c")

    sp = subparsers.add_parser("verify", help="run the numerical lemma checks")
    _add_common(sp)
    sp.add_argument("--trials", type=int, default=None, help="random functions per inequality")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_values = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    file_values = json.load(fh)
            except FileNotFoundError as exc:
                raise ConfigError(f"config file not found: {args.config}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {args.config}: {exc}") from exc
            if not isinstance(file_values, dict):
                raise ConfigError(f"config file {args.config} must hold a JSON object")
        config = build_config(args.subcommand, file_values, _flag_values(args))
    except ConfigError as exc:
        print(f"latmin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report, code = run(config)
    except ConfigError as exc:
        print(f"latmin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"latmin: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    _print_summary(report, file=sys.stdout)
    return code


def _print_summary(report: dict, file) -> None:
    sub = report["subcommand"]
    res = report["results"]
    if sub == "solve":
        print(
            f"lambda0={res['lambda0']:.12g} lambda={res['lambda']:.12g} "
            f"b={res['b_tilde']:.12g} residual={res['residual']:.3e} "
            f"converged={res['converged']}",
            file=file,
        )
    elif sub == "sweep":
        for row in res["rows"]:
            print(
                f"beta={row['beta']:<8g} lambda0={row['lambda0']:.10g} "
                f"b={row['b_tilde']:.10g} converged={row['converged']}",
                file=file,
            )
    elif sub == "decompose":
        print(
            f"k={res['k']} remainder_sup={res['remainder_sup']:.3e} "
            f"separation_ok={res['separation_ok']} energy_defect={res['energy_defect']}",
            file=file,
        )
    elif sub == "verify":
        for check in res["checks"]:
            status = "pass" if check["passed"] else "FAIL"
            print(
                f"{status}  {check['name']:<28} defect={check['defect']:.3e} "
                f"tol={check['tolerance']:.3e}",
                file=file,
            )
        print(f"all_passed={res['all_passed']}", file=file)


if __name__ == "__main__":
    sys.exit(main())
