"""Command-line front end: configs in, certification reports out.

Subcommands:

    causalcov bounds   --config cfg.json [--out DIR]
    causalcov verify   --config cfg.json [--out DIR] [--seed N] [--replicates N]
    causalcov identify --config cfg.json [--out DIR] [--seed N] [--replicates N]
    causalcov sweep    --config cfg.json [--out DIR] [--seed N] [--replicates N]
    causalcov simulate --config cfg.json [--out DIR] [--seed N] [--replicates N]

Exit codes: 0 = all certifications pass or are vacuous; 1 = a non-vacuous
certification failed; 2 = configuration or model error.

Reports are deterministic for a fixed config: JSON is emitted with sorted
keys, CSV with a fixed documented header, floats via repr round-tripping.
Wall-clock timestamps live only in the .meta.json sidecar next to each
report, which is excluded from any byte-level comparison.

CSV column orders (fixed):

    verify.csv:   event,T,k,replicates,hits,frequency,ci_low,ci_high,
                  bound,vacuous,certified
    sweep.csv:    event,T,k,delta,replicates,hits,frequency,ci_low,ci_high,
                  bound,vacuous,certified,psi_k,anticonc_bound,
                  anticonc_threshold,upper_tail_bound,ls_error_bound,
                  burnin_satisfied
    identify.csv: replicate,op_error
    simulate.csv: replicate,t,x0,...,x{d-1}

The ``bound_scale`` config key is a test hook: every theoretical bound is
multiplied by it immediately before certification (reported bounds are the
scaled ones), so a deliberately wrong bound can be injected end-to-end.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    anticoncentration_bound,
    arma_corollary_bound,
    arma_prefactor,
    armastability_bound,
)
from .config import ExperimentConfig, load_config
from .errors import CausalCovError, ConfigError
from .estimator import ls_bound_details
from .montecarlo import certify, run_identification_experiment, run_tail_experiment
from .process import VarSystem, derive_seed, gamma_k, kappa, noise_block, paths_from_noise

__all__ = ["main"]

VERIFY_COLUMNS = (
    "event",
    "T",
    "k",
    "replicates",
    "hits",
    "frequency",
    "ci_low",
    "ci_high",
    "bound",
    "vacuous",
    "certified",
)

SWEEP_COLUMNS = VERIFY_COLUMNS[:3] + ("delta",) + VERIFY_COLUMNS[3:] + (
    "psi_k",
    "anticonc_bound",
    "anticonc_threshold",
    "upper_tail_bound",
    "ls_error_bound",
    "burnin_satisfied",
)


def _jsonable(obj):
    """Recursively convert report objects to plain JSON data."""
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row.get(col)) for col in columns])


def _write_meta(path: Path, subcommand: str, outputs: list[Path]) -> None:
    meta = {
        "created": datetime.now(timezone.utc).isoformat(),
        "subcommand": subcommand,
        "tool": "causalcov",
        "version": __version__,
        "outputs": [p.name for p in outputs],
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _load(args: argparse.Namespace) -> tuple[ExperimentConfig, Path]:
    config = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"--seed must be nonnegative, got {args.seed}")
        config.seed = args.seed
    if args.replicates is not None:
        if args.replicates < 1:
            raise ConfigError(f"--replicates must be >= 1, got {args.replicates}")
        config.replicates = args.replicates
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return config, out_dir


def _truncation(T: int, k: int) -> tuple[int, str | None]:
    t_eff = k * (T // k)
    if t_eff == T:
        return t_eff, None
    return t_eff, f"horizon truncated from T={T} to T'={t_eff} (k={k} does not divide T)"


def _experiment_row(exp, T: int, k: int, scale: float) -> dict:
    """Flatten one experiment into a CSV/JSON row, applying the bound hook."""
    bound = exp.bound * scale
    certified, vacuous = certify(exp.ci[1], bound)
    return {
        "event": exp.event,
        "T": T,
        "k": k,
        "replicates": exp.replicates,
        "hits": exp.hits,
        "frequency": exp.frequency,
        "ci_low": exp.ci[0],
        "ci_high": exp.ci[1],
        "bound": bound,
        "vacuous": vacuous,
        "certified": certified,
        "seed": exp.seed,
        "extras": {k_: v for k_, v in exp.extras.items() if np.isscalar(v) or v is None},
    }


def _cell_bounds(config: ExperimentConfig, T: int, k: int, delta: float) -> dict:
    """Cell-level theoretical quantities shared by bounds and sweep rows."""
    spec = config.process_spec(T, k)
    report = anticoncentration_bound(spec.operator())
    cell = {
        "psi_k": report.psi_k,
        "chernoff_exponent": report.chernoff_exponent,
        "anticonc_bound": report.anticonc_probability,
        "anticonc_threshold": report.anticonc_threshold,
        "upper_tail_bound": report.upper_tail_probability,
        "intermediates": report.intermediates,
        "ls_error_bound": None,
        "burnin_satisfied": None,
    }
    if isinstance(config.model, VarSystem):
        details = ls_bound_details(config.model, T, k, delta)
        cell["ls_error_bound"] = details["bound"]
        cell["burnin_satisfied"] = details["burnin_satisfied"]
        cell["c_sys"] = details["c_sys"]
        cell["lam_min_gamma_k"] = details["lam_min_gamma"]
    return cell


def cmd_bounds(args: argparse.Namespace) -> int:
    config, out_dir = _load(args)
    t_eff, notice = _truncation(config.T, config.k)
    report: dict = {
        "config": config.to_dict(),
        "T": config.T,
        "k": config.k,
        "k_auto": config.k_auto,
        "effective_horizon": t_eff,
    }
    if notice:
        report["truncation_notice"] = notice
    cell = _cell_bounds(config, config.T, config.k, config.delta)
    report.update(cell)
    if isinstance(config.model, VarSystem):
        sys_model = config.model
        report["kappa"] = kappa(sys_model, k_max=config.T)
        gamma = gamma_k(sys_model, config.k)
        report["gamma_k_spectrum"] = np.linalg.eigvalsh(np.asarray(gamma)).tolist()
        report["armastability_bound"] = armastability_bound(sys_model, config.T)
        _, base = arma_prefactor(sys_model, config.T, config.k)
        report["arma_prefactor_base"] = base
        report["arma_corollary_bound"] = arma_corollary_bound(sys_model, config.T, config.k)
        report["delta"] = config.delta
    json_path = out_dir / "bounds.json"
    _write_json(json_path, report)
    _write_meta(out_dir / "bounds.meta.json", "bounds", [json_path])
    print(f"wrote {json_path}")
    return 0


def _run_events(config: ExperimentConfig, T: int, k: int, seed_offset: int) -> list[dict]:
    spec = config.process_spec(T, k)
    rows = []
    for idx, ev in enumerate(config.events):
        exp = run_tail_experiment(
            spec,
            ev.event,
            params=dict(ev.params),
            R=config.replicates,
            seed=derive_seed(config.seed, seed_offset + idx),
        )
        rows.append(_experiment_row(exp, T, k, config.bound_scale))
    return rows


def cmd_verify(args: argparse.Namespace) -> int:
    config, out_dir = _load(args)
    t_eff, notice = _truncation(config.T, config.k)
    rows = _run_events(config, config.T, config.k, seed_offset=0)
    overall = all(r["certified"] for r in rows)
    summary: dict = {
        "config": config.to_dict(),
        "effective_horizon": t_eff,
        "results": rows,
        "overall_pass": overall,
    }
    if notice:
        summary["truncation_notice"] = notice
    csv_path = out_dir / "verify.csv"
    json_path = out_dir / "verify.json"
    _write_csv(csv_path, VERIFY_COLUMNS, rows)
    _write_json(json_path, summary)
    _write_meta(out_dir / "verify.meta.json", "verify", [csv_path, json_path])
    for r in rows:
        status = "vacuous" if r["vacuous"] else ("pass" if r["certified"] else "FAIL")
        print(
            f"{r['event']}: frequency={r['frequency']:.6g} "
            f"ci_high={r['ci_high']:.6g} bound={r['bound']:.6g} [{status}]"
        )
    print(f"wrote {csv_path} and {json_path}")
    return 0 if overall else 1


def cmd_identify(args: argparse.Namespace) -> int:
    config, out_dir = _load(args)
    if not isinstance(config.model, VarSystem):
        raise ConfigError("identify requires a var model")
    exp = run_identification_experiment(
        config.model,
        config.T,
        config.k,
        config.delta,
        R=config.replicates,
        seed=config.seed,
    )
    op_errors = exp.extras["op_errors"]
    burnin_ok = bool(exp.extras["burnin_satisfied"])
    bound = exp.bound * config.bound_scale
    certified, vacuous = certify(exp.ci[1], bound)
    report: dict = {
        "config": config.to_dict(),
        "ls_error_bound": exp.extras["ls_bound"],
        "c_sys": exp.extras["c_sys"],
        "burnin_satisfied": burnin_ok,
        "replicates": exp.replicates,
        "exceedance": {
            "hits": exp.hits,
            "frequency": exp.frequency,
            "ci_low": exp.ci[0],
            "ci_high": exp.ci[1],
            "budget": bound,
        },
        "median_op_error": exp.extras["median_op_error"],
        "seed": exp.seed,
    }
    if burnin_ok:
        report["certified"] = certified
        report["vacuous"] = vacuous
    csv_path = out_dir / "identify.csv"
    json_path = out_dir / "identify.json"
    _write_csv(
        csv_path,
        ("replicate", "op_error"),
        [{"replicate": i, "op_error": e} for i, e in enumerate(op_errors)],
    )
    _write_json(json_path, report)
    _write_meta(out_dir / "identify.meta.json", "identify", [csv_path, json_path])
    print(
        f"ls-error-exceeds-bound: frequency={exp.frequency:.6g} "
        f"budget={bound:.6g} burnin_satisfied={burnin_ok}"
    )
    print(f"wrote {csv_path} and {json_path}")
    if not burnin_ok:
        return 0
    return 0 if certified else 1


def cmd_sweep(args: argparse.Namespace) -> int:
    config, out_dir = _load(args)
    t_grid = config.grid.get("T", [config.T])
    k_grid = config.grid.get("k", [config.k])
    d_grid = config.grid.get("delta", [config.delta])
    if (len(t_grid) > 1 or len(k_grid) > 1) and not isinstance(config.model, VarSystem):
        raise ConfigError("sweep grids over T or k require a var model")
    rows: list[dict] = []
    cells: list[dict] = []
    offset = 0
    for T in t_grid:
        for k in k_grid:
            for delta in d_grid:
                cell = _cell_bounds(config, T, k, delta)
                cell_head = {kk: vv for kk, vv in cell.items() if kk != "intermediates"}
                event_rows = _run_events(config, T, k, seed_offset=offset)
                offset += len(config.events)
                for r in event_rows:
                    r["delta"] = delta
                    for col in (
                        "psi_k",
                        "anticonc_bound",
                        "anticonc_threshold",
                        "upper_tail_bound",
                        "ls_error_bound",
                        "burnin_satisfied",
                    ):
                        r[col] = cell_head[col]
                rows.extend(event_rows)
                cells.append({"T": T, "k": k, "delta": delta, **cell_head})
    overall = all(r["certified"] for r in rows)
    summary = {
        "config": config.to_dict(),
        "cells": cells,
        "results": rows,
        "overall_pass": overall,
    }
    csv_path = out_dir / "sweep.csv"
    json_path = out_dir / "sweep.json"
    _write_csv(csv_path, SWEEP_COLUMNS, rows)
    _write_json(json_path, summary)
    _write_meta(out_dir / "sweep.meta.json", "sweep", [csv_path, json_path])
    print(f"{len(rows)} rows over {len(cells)} cells; overall_pass={overall}")
    print(f"wrote {csv_path} and {json_path}")
    return 0 if overall else 1


def cmd_simulate(args: argparse.Namespace) -> int:
    config, out_dir = _load(args)
    spec = config.process_spec()
    w = noise_block(spec, config.seed, 0, config.replicates)
    x = paths_from_noise(spec, w)
    d = spec.state_dim
    columns = ("replicate", "t") + tuple(f"x{i}" for i in range(d))
    rows = []
    for r in range(x.shape[0]):
        for t in range(x.shape[1]):
            row = {"replicate": r, "t": t}
            for i in range(d):
                row[f"x{i}"] = x[r, t, i]
            rows.append(row)
    csv_path = out_dir / "simulate.csv"
    _write_csv(csv_path, columns, rows)
    _write_meta(out_dir / "simulate.meta.json", "simulate", [csv_path])
    print(f"wrote {csv_path} ({x.shape[0]} paths, horizon {x.shape[1]})")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalcov",
        description="Certify covariance tail bounds for causal Gaussian processes.",
    )
    parser.add_argument("--version", action="version", version=f"causalcov {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    handlers = {
        "bounds": (cmd_bounds, "evaluate every theoretical bound for a config"),
        "verify": (cmd_verify, "Monte-Carlo certify tail bounds"),
        "identify": (cmd_identify, "run the least-squares identification experiment"),
        "sweep": (cmd_sweep, "verify over a (T, k, delta) grid"),
        "simulate": (cmd_simulate, "sample trajectories to CSV"),
    }
    for name, (func, help_text) in handlers.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--replicates", type=int, default=None, help="override the replicate count"
        )
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CausalCovError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
