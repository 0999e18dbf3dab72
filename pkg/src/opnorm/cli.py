"""Command-line front end: ``opnorm <command> --config FILE --out DIR``.

Every command writes CSV files plus ``manifest.json`` into the output
directory.  Exit codes: 0 success, 2 configuration error, 3 numerical
precondition failure, 4 resource cap.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys as _sys
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .bound_engine import BOUND_CSV_HEADER, BoundConfig, fourier_exact, strong_bound, weak_bound
from .config import ExperimentConfig, load_config
from .csvio import to_csv_text
from .eigensystems import EigenSystem
from .errors import ConfigError, DomainError, OpNormError, PreconditionError, ResourceError, UnsupportedOperationError
from .oracle import QcqpInstance, dual_oracle, grid_oracle, q_set_boundary, two_by_two_F
from .psi_spectral import assemble, lambda_max, lambda_max_weighted, lambda_min, tail_lambda_max_bound
from .random_sampling import REPORT_CSV_HEADER, complexity_G, corollary_bound, critical_radius, mc_psi_concentration
from .sampling_ops import SamplingOperator

__all__ = ["main", "run_command"]

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_RESOURCE = 0, 2, 3, 4

Table = tuple[Sequence[str], list[tuple], int]  # header, rows, number of leading sort-key columns


def _eps_values(params: dict[str, Any], default: list[float]) -> list[float]:
    if params.get("eps_grid") is not None:
        return list(params["eps_grid"])
    if params.get("eps2_grid") is not None:
        return [math.sqrt(v) for v in params["eps2_grid"]]
    return default


def _default_eps(sys: EigenSystem) -> list[float]:
    s1 = float(sys.sigma(1))
    return [math.sqrt(v) for v in np.linspace(0.0, s1, 11)]


def _pmap(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _bound_config(params: dict[str, Any], tolerance: float | None) -> BoundConfig:
    pc = params.get("p_candidates")
    return BoundConfig(
        p_candidates=tuple(pc) if pc is not None else None,
        t_rtol=tolerance if tolerance is not None else params.get("t_rtol", 1e-8),
        tail_method=params.get("tail_method", "auto"),
        horizon=params.get("horizon"),
        rho_mode=params.get("rho_mode", "optimized"),
        rho2=params.get("rho2"),
    )


def cmd_bound(cfg: ExperimentConfig, threads: int = 1, tolerance: float | None = None) -> dict[str, Table]:
    sys, op, params = cfg.eigensystem, cfg.operator, cfg.params
    kinds = params["kinds"] or (
        ["strong", "weak", "fourier_exact"] if op.variant == "fourier_truncation" else ["strong", "weak"]
    )
    bcfg = _bound_config(params, tolerance)
    weak_p = params["weak_p"] or op.n
    eps_list = _eps_values(params, _default_eps(sys))

    def rows_for(eps: float) -> list[tuple]:
        out = []
        if "strong" in kinds:
            out.append(strong_bound(eps, sys, op, bcfg).csv_row())
        if "weak" in kinds:
            out.append(weak_bound(eps, sys, op, weak_p, bcfg.tail_method, bcfg).csv_row())
        if "fourier_exact" in kinds:
            value = fourier_exact(eps, sys, op.n)
            out.append((eps, value, op.n, math.nan, 0.0, float(sys.sigma(op.n + 1)), "fourier_exact"))
        return out

    rows = [r for chunk in _pmap(rows_for, eps_list, threads) for r in chunk]
    return {"bounds.csv": (BOUND_CSV_HEADER, rows, 1)}


def cmd_oracle(cfg: ExperimentConfig, threads: int = 1, tolerance: float | None = None) -> dict[str, Table]:
    sys, op, params = cfg.eigensystem, cfg.operator, cfg.params
    N = params["N"] or op.n + 10
    bcfg = _bound_config(params, tolerance)
    weak_p = params["weak_p"] or op.n
    slack = params["slack"]
    eps_list = _eps_values(params, _default_eps(sys))

    def row_for(eps: float) -> tuple:
        inst = QcqpInstance.from_operator(op, sys, N, eps)
        dual = dual_oracle(inst)
        grid = grid_oracle(inst, params["resolution"]) if N <= 4 else math.nan
        strong = strong_bound(eps, sys, op, bcfg).value
        try:
            weak = weak_bound(eps, sys, op, weak_p, bcfg.tail_method, bcfg).value
        except PreconditionError:
            weak = math.nan
        ok = dual <= strong + slack and (math.isnan(weak) or dual <= weak + slack)
        if not math.isnan(grid):
            ok = ok and grid <= dual + slack
        return (eps, N, dual, grid, strong, weak, bool(ok))

    rows = _pmap(row_for, eps_list, threads)
    return {"oracle.csv": (("epsilon", "N", "dual", "grid", "strong", "weak", "sandwich_ok"), rows, 1)}


def cmd_psi(cfg: ExperimentConfig, threads: int = 1, tolerance: float | None = None) -> dict[str, Table]:
    sys, op, params = cfg.eigensystem, cfg.operator, cfg.params
    a, b = int(params["a"]), int(params["b"] or op.n)
    block = assemble(op, sys, a, b)
    out: dict[str, Table] = {
        "psi_block.csv": (("row", "col", "value"), block.csv_rows(), 2),
        "psi_spectrum.csv": (
            ("a", "b", "lambda_min", "lambda_max", "lambda_max_weighted"),
            [(a, b, lambda_min(block), lambda_max(block), lambda_max_weighted(block, sys))],
            2,
        ),
    }
    if params["tail_p"] is not None:
        rows = []
        for method in params["tail_methods"]:
            rep = tail_lambda_max_bound(op, sys, int(params["tail_p"]), method, params["horizon"])
            rows.append((method, rep.p, rep.horizon, rep.value, rep.certified))
        out["tail_bounds.csv"] = (("method", "p", "horizon", "value", "certified"), rows, 1)
    return out


def _fig_sp_per(cfg: ExperimentConfig) -> dict[str, Table]:
    params = cfg.params
    op = cfg.operator or SamplingOperator.uniform_grid(params["n"] or 9)
    sys = cfg.eigensystem or EigenSystem.sobolev()
    N = params["N"] or 6 * op.n
    block = assemble(op, sys, 1, N)
    return {"fig_sp_per.csv": (("row", "col", "value"), block.csv_rows(), 2)}


def _fig_geom_fourier(cfg: ExperimentConfig) -> dict[str, Table]:
    params = cfg.params
    n = params["n"] or (cfg.operator.n if cfg.operator else 2)
    sys = cfg.eigensystem or EigenSystem.polynomial(1.0, 2.0)
    N = params["N"] or n + 1
    op = SamplingOperator.fourier_truncation(n)
    s1 = float(sys.sigma(1))
    eps2 = params["eps2_grid"] or list(np.linspace(0.0, s1, params["points"]))
    curve = []
    for e2 in eps2:
        inst = QcqpInstance.from_operator(op, sys, N, math.sqrt(e2))
        curve.append((float(e2), fourier_exact(math.sqrt(e2), sys, n), dual_oracle(inst)))
    boundary = q_set_boundary(QcqpInstance.from_operator(op, sys, N, 0.0), params["samples"])
    return {
        "fig_geom_fourier_boundary.csv": (("theta", "Q2", "QPhi"), boundary, 1),
        "fig_geom_fourier_curve.csv": (("eps2", "exact", "dual"), curve, 1),
    }


def _fig_proof_geom(cfg: ExperimentConfig) -> dict[str, Table]:
    params, op, sys = cfg.params, cfg.operator, cfg.eigensystem
    N = params["N"] or op.n + 2
    s1 = float(sys.sigma(1))
    eps2 = params["eps2_grid"] or list(np.linspace(0.0, s1, params["points"]))
    curve = [(float(e2), dual_oracle(QcqpInstance.from_operator(op, sys, N, math.sqrt(e2)))) for e2 in eps2]
    boundary = q_set_boundary(QcqpInstance.from_operator(op, sys, N, 0.0), params["samples"])
    return {
        "fig_proof_geom_boundary.csv": (("theta", "Q2", "QPhi"), boundary, 1),
        "fig_proof_geom_curve.csv": (("eps2", "dual"), curve, 1),
    }


def _fig_1(cfg: ExperimentConfig) -> dict[str, Table]:
    p = cfg.params
    u2, v2, a2, d2 = (float(p[k]) for k in ("u2", "v2", "a2", "d2"))
    eps2 = p["eps2_grid"] or list(np.linspace(0.0, max(u2, v2), p["points"]))
    curve = [(float(e2), two_by_two_F(u2, v2, a2, d2, e2)) for e2 in eps2]
    verts = [("origin", 0.0, 0.0), ("P", u2, a2), ("Q", v2, d2)]
    return {
        "fig_1_curve.csv": (("eps2", "F"), curve, 1),
        "fig_1_triangle.csv": (("vertex", "x", "y"), verts, 1),
    }


_FIGURES = {
    "fig:sp:per": _fig_sp_per,
    "fig:geom:fourier": _fig_geom_fourier,
    "fig:proof:geom": _fig_proof_geom,
    "fig:1": _fig_1,
}


def cmd_figures(cfg: ExperimentConfig, threads: int = 1, tolerance: float | None = None) -> dict[str, Table]:
    return _FIGURES[cfg.params["figure"]](cfg)


def cmd_critical_radius(cfg: ExperimentConfig, threads: int = 1, tolerance: float | None = None) -> dict[str, Table]:
    sys = cfg.eigensystem
    tol = tolerance if tolerance is not None else cfg.params["tol"]

    def row_for(n: int) -> tuple:
        r = critical_radius(n, sys, tol)
        g = complexity_G(n, sys, r)
        return (n, r, r * r, g, g - r * r)

    rows = _pmap(row_for, list(cfg.params["n_grid"]), threads)
    return {"critical_radius.csv": (("n", "r_n", "r_n2", "G", "residual"), rows, 1)}


def cmd_random(
    cfg: ExperimentConfig, threads: int = 1, tolerance: float | None = None, seed: int | None = None
) -> dict[str, Table]:
    sys, params = cfg.eigensystem, cfg.params
    lo, hi = params["p_range"]
    reports = [
        corollary_bound(n, sys, params["C_psi"], params["eps"], range(lo, hi + 1), params["c_sigma_grid"]).csv_row()
        for n in params["n_grid"]
    ]
    out: dict[str, Table] = {"random_report.csv": (REPORT_CSV_HEADER, reports, 1)}
    if params["mc"]:
        root = seed if seed is not None else (cfg.seed if cfg.seed is not None else 0)
        summary, trials = [], []
        for mc in params["mc"]:
            res = mc_psi_concentration(sys, mc["p"], mc["n"], mc["delta"], mc["trials"], root)
            summary.append(
                (mc["p"], mc["n"], float(mc["delta"]), mc["trials"], res.freq, res.lemma_bound, res.std_error, res.within_bound())
            )
            trials.extend(
                (mc["p"], mc["n"], float(mc["delta"]), t, float(v), bool(v > mc["delta"])) for t, v in enumerate(res.norms)
            )
        out["concentration.csv"] = (
            ("p", "n", "delta", "trials", "freq", "lemma_bound", "std_error", "within_bound"),
            summary,
            3,
        )
        out["concentration_trials.csv"] = (("p", "n", "delta", "trial", "deviation", "exceeds"), trials, 4)
    return out


_COMMANDS = {
    "bound": cmd_bound,
    "oracle": cmd_oracle,
    "psi": cmd_psi,
    "figures": cmd_figures,
    "critical-radius": cmd_critical_radius,
}


def run_command(
    cfg: ExperimentConfig,
    out_dir: str | Path,
    seed: int | None = None,
    threads: int = 1,
    tolerance: float | None = None,
) -> dict[str, Any]:
    """Run a validated config and write its CSV files and manifest; returns the manifest."""
    start = time.perf_counter()
    if cfg.command == "random":
        tables = cmd_random(cfg, threads, tolerance, seed)
    else:
        tables = _COMMANDS[cfg.command](cfg, threads, tolerance)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for name, (header, rows, nkey) in sorted(tables.items()):
        ordered = sorted(rows, key=lambda r: tuple(r[:nkey]))
        text = to_csv_text(header, ordered)
        (out / name).write_text(text, encoding="utf-8")
        checksums[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()
    manifest = {
        "command": cfg.command,
        "config_sha256": cfg.sha256,
        "tool_version": __version__,
        "seeds": {"cli": seed, "config": cfg.seed},
        "wall_clock_seconds": time.perf_counter() - start,
        "outputs": checksums,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opnorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("bound", "oracle", "psi", "figures", "critical-radius", "random"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML or JSON experiment config")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--seed", type=int, default=None, help="root seed for Monte-Carlo streams")
        p.add_argument("--threads", type=int, default=1, help="worker threads for independent grid points")
        p.add_argument("--tolerance", type=float, default=None, help="search tolerance override")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.tolerance is not None and not args.tolerance > 0:
            raise ConfigError("--tolerance must be positive")
        cfg = load_config(args.config, args.command)
        run_command(cfg, args.out, args.seed, args.threads, args.tolerance)
    except ConfigError as exc:
        print(f"config error ({args.config}): {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource cap ({args.config}): {exc}", file=_sys.stderr)
        return EXIT_RESOURCE
    except (PreconditionError, DomainError, UnsupportedOperationError) as exc:
        print(f"numerical precondition failed ({args.config}): {exc}", file=_sys.stderr)
        return EXIT_PRECONDITION
    except OpNormError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error ({args.config}): {exc}", file=_sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
