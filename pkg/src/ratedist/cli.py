"""Command-line interface: solve single points, sweep curves, trace
residuals, and benchmark the two solvers against each other.

Exit status: 0 on success, 2 for invalid input or configuration, 3 when a
solver failed to converge (or broke down numerically).
"""
from __future__ import annotations

import argparse
import statistics
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import fileio
from .blahut import BAOptions, BAResult, ba_fixed_slope, ba_search_slope
from .problem import RDProblem, validate_problem
from .sinkhorn import SolverOptions, solve_rd
from .sources import (
    GridSpec,
    build_bifurcation_fixture,
    build_binary,
    build_gaussian,
    build_laplacian,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3

#: per-family grid defaults: (half_width, delta, sigma)
FAMILY_DEFAULTS = {
    "gaussian": (8.0, 0.5, 2.0),
    "laplacian": (14.0, 0.2, 2.0),
}


@dataclass
class ExperimentConfig:
    """Resolved run configuration shared by all subcommands."""

    source: str
    p_one: float = 0.5
    sigma: Optional[float] = None
    grid_m: Optional[float] = None
    grid_delta: Optional[float] = None
    solver: str = "as"
    distortions: list[float] = field(default_factory=list)
    dmin: Optional[float] = None
    dmax: Optional[float] = None
    points: int = 25
    lambda_grid: Optional[tuple[float, float, int]] = None
    max_iter: Optional[int] = None
    tol: Optional[float] = None
    repeats: int = 1
    out: Optional[str] = None
    fmt: str = "csv"
    include_law: bool = False
    seed: Optional[int] = None

    def solver_options(self) -> SolverOptions:
        kwargs: dict[str, Any] = {}
        if self.max_iter is not None:
            kwargs["max_iter"] = self.max_iter
        if self.tol is not None:
            kwargs["residual_tol"] = self.tol
        return SolverOptions(**kwargs)

    def ba_options(self) -> BAOptions:
        kwargs: dict[str, Any] = {}
        if self.max_iter is not None:
            kwargs["max_iter"] = self.max_iter
        return BAOptions(**kwargs)


def build_problem(config: ExperimentConfig) -> tuple[RDProblem, str]:
    """Materialize the problem named by ``config.source``.

    The source is one of the built-in families (``binary``, ``gaussian``,
    ``laplacian``, ``bifurcation``) or a path to a problem JSON file.
    """
    name = config.source
    if name == "binary":
        return build_binary(config.p_one), f"binary(p={config.p_one})"
    if name in FAMILY_DEFAULTS:
        m_def, delta_def, sigma_def = FAMILY_DEFAULTS[name]
        half_width = config.grid_m if config.grid_m is not None else m_def
        delta = config.grid_delta if config.grid_delta is not None else delta_def
        sigma = config.sigma if config.sigma is not None else sigma_def
        spec = GridSpec(half_width, delta)
        builder = build_gaussian if name == "gaussian" else build_laplacian
        label = f"{name}(W={half_width},delta={delta},sigma={sigma})"
        return builder(spec, sigma), label
    if name == "bifurcation":
        return build_bifurcation_fixture(), "bifurcation"
    problem = fileio.load_problem(name)
    issues = validate_problem(problem)
    if issues:
        raise ValueError(f"problem file {name}: " + "; ".join(issues))
    return problem, name


def _solution_doc(solution, wall_time: float, include_law: bool) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "rate_nats": solution.rate,
        "rate_bits": solution.rate_bits if hasattr(solution, "rate_bits")
        else solution.rate / np.log(2),
        "distortion": solution.distortion,
        "lambda": solution.lam,
        "iterations": solution.iterations,
        "converged": bool(solution.converged),
        "wall_time_s": wall_time,
    }
    warnings = []
    if solution.lam == 0.0:
        warnings.append("distortion constraint inactive")
    if getattr(solution, "lambda_capped", False):
        warnings.append("distortion dual capped")
    if getattr(solution, "ambiguous", False):
        warnings.append("slope search ambiguous: no slope attains the target "
                        "(linear curve segment)")
    if warnings:
        doc["warnings"] = warnings
    if getattr(solution, "residuals", None) is not None:
        rec = solution.residuals
        doc["residuals"] = {
            "r_psi": rec.r_psi,
            "r_phi": rec.r_phi,
            "r_lambda": rec.r_lambda,
            "r_eta": rec.r_eta,
        }
    if isinstance(solution, BAResult):
        doc["search_steps"] = solution.search_steps
    if include_law:
        doc["w"] = solution.w.w.tolist()
        doc["r"] = solution.r.tolist()
    return doc


def cmd_solve(config: ExperimentConfig) -> int:
    if len(config.distortions) != 1:
        raise ValueError("solve needs exactly one --distortion value")
    problem, label = build_problem(config)
    target = config.distortions[0]
    doc: dict[str, Any] = {
        "source": label,
        "shape": list(problem.shape),
        "distortion_target": target,
    }
    if config.seed is not None:
        doc["seed"] = config.seed
    ok = True
    solvers: dict[str, Any] = {}
    if config.solver in ("as", "both"):
        t0 = time.perf_counter()
        solution = solve_rd(problem, target, config.solver_options())
        solvers["as"] = _solution_doc(solution, time.perf_counter() - t0, config.include_law)
        ok &= solution.converged
    if config.solver in ("ba", "both"):
        t0 = time.perf_counter()
        result = ba_search_slope(problem, target, config.ba_options())
        solvers["ba"] = _solution_doc(result, time.perf_counter() - t0, config.include_law)
        ok &= result.converged
    doc["solvers"] = solvers
    if len(solvers) == 2:
        doc["abs_rate_diff"] = abs(solvers["as"]["rate_nats"] - solvers["ba"]["rate_nats"])
    if config.fmt == "csv":
        rows = []
        for name, sub in solvers.items():
            row = {
                "D": sub["distortion"],
                "R_nats": sub["rate_nats"],
                "R_bits": sub["rate_bits"],
                "lambda": sub["lambda"],
                "iterations": sub["iterations"],
                "converged": sub["converged"],
                "wall_time_s": sub["wall_time_s"],
                "solver": name,
            }
            row.update(sub.get("residuals", {}))
            rows.append(row)
        fileio.write_rows(rows, ["solver"] + fileio.CURVE_COLUMNS, config.out, "csv")
    else:
        fileio.write_json(doc, config.out)
    return EXIT_OK if ok else EXIT_SOLVER


def _curve_row_as(problem, D, opts, include_law=False) -> dict[str, Any]:
    t0 = time.perf_counter()
    try:
        sol = solve_rd(problem, float(D), opts)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return {"D": float(D), "converged": f"error: {exc}", "wall_time_s": time.perf_counter() - t0}
    rec = sol.residuals
    return {
        "D": sol.distortion,
        "R_nats": sol.rate,
        "R_bits": sol.rate_bits,
        "lambda": sol.lam,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "r_psi": rec.r_psi,
        "r_phi": rec.r_phi,
        "r_lambda": rec.r_lambda,
        "r_eta": rec.r_eta,
        "wall_time_s": time.perf_counter() - t0,
    }


def _curve_row_ba(problem, lam, opts) -> dict[str, Any]:
    t0 = time.perf_counter()
    try:
        res = ba_fixed_slope(problem, float(lam), opts)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return {"lambda": float(lam), "converged": f"error: {exc}",
                "wall_time_s": time.perf_counter() - t0}
    return {
        "D": res.distortion,
        "R_nats": res.rate,
        "R_bits": res.rate / np.log(2),
        "lambda": res.lam,
        "iterations": res.iterations,
        "converged": res.converged,
        "wall_time_s": time.perf_counter() - t0,
    }


def cmd_curve(config: ExperimentConfig) -> int:
    problem, label = build_problem(config)
    rows: list[dict[str, Any]] = []
    if config.solver == "ba":
        if config.lambda_grid is None:
            raise ValueError("a BA sweep needs --lambda-grid start:stop:count")
        start, stop, count = config.lambda_grid
        grid = np.linspace(start, stop, count)
        opts = config.ba_options()
        rows = [_curve_row_ba(problem, lam, opts) for lam in grid]
    elif config.solver == "as":
        if config.dmin is None or config.dmax is None:
            raise ValueError("a distortion sweep needs --dmin and --dmax")
        if not config.dmin < config.dmax:
            raise ValueError("--dmin must be below --dmax")
        if config.points < 2:
            raise ValueError("--points must be at least 2")
        grid = np.linspace(config.dmin, config.dmax, config.points)
        opts = config.solver_options()
        rows = [_curve_row_as(problem, D, opts) for D in grid]
    else:
        raise ValueError("curve sweeps run one solver at a time (as or ba)")
    fileio.write_rows(rows, fileio.CURVE_COLUMNS, config.out, config.fmt)
    failed = [r for r in rows if not (r.get("converged") is True)]
    return EXIT_OK if len(failed) < len(rows) else EXIT_SOLVER


def cmd_residuals(config: ExperimentConfig) -> int:
    if len(config.distortions) != 1:
        raise ValueError("residuals needs exactly one --distortion value")
    problem, _ = build_problem(config)
    solution = solve_rd(problem, config.distortions[0], config.solver_options())
    rows = [
        {"iter": rec.iteration, "r_psi": rec.r_psi, "r_phi": rec.r_phi,
         "r_lambda": rec.r_lambda, "r_eta": rec.r_eta}
        for rec in solution.trace
    ]
    fileio.write_rows(rows, fileio.RESIDUAL_COLUMNS, config.out, config.fmt)
    return EXIT_OK if solution.converged else EXIT_SOLVER


def cmd_compare(config: ExperimentConfig) -> int:
    if not config.distortions:
        raise ValueError("compare needs at least one --distortion value")
    problem, label = build_problem(config)
    as_opts = config.solver_options()
    ba_opts = config.ba_options()
    rows: list[dict[str, Any]] = []
    all_ok = True
    for target in config.distortions:
        as_times = []
        ba_times = []
        for _ in range(max(1, config.repeats)):
            t0 = time.perf_counter()
            sol = solve_rd(problem, target, as_opts)
            as_times.append(time.perf_counter() - t0)
        for _ in range(max(1, config.repeats)):
            t0 = time.perf_counter()
            res = ba_search_slope(problem, target, ba_opts)
            ba_times.append(time.perf_counter() - t0)
        ok = sol.converged and res.converged
        all_ok &= ok
        rows.append({
            "source": label,
            "D": target,
            "rate_as": sol.rate,
            "rate_ba": res.rate,
            "abs_diff": abs(sol.rate - res.rate),
            "lambda_as": sol.lam,
            "lambda_ba": res.lam,
            "t_as_mean": statistics.fmean(as_times),
            "t_as_median": statistics.median(as_times),
            "t_ba_mean": statistics.fmean(ba_times),
            "t_ba_median": statistics.median(ba_times),
            "speedup": statistics.fmean(ba_times) / statistics.fmean(as_times),
            "ba_search_steps": res.search_steps,
            "as_iterations": sol.iterations,
            "converged": ok,
        })
    fileio.write_rows(rows, fileio.COMPARE_COLUMNS, config.out, config.fmt)
    return EXIT_OK if all_ok else EXIT_SOLVER


def cmd_fixtures(config: ExperimentConfig) -> int:
    lines = [
        "binary        2x2 Hamming source; --p sets P(X=1) (default 0.5)",
        "gaussian      squared-error source discretized on [-8, 8], delta 0.5, sigma 2",
        "laplacian     absolute-error source discretized on [-14, 14], delta 0.2, sigma 2",
        "bifurcation   2x3 fixture whose curve has an affine segment "
        "(approx. D in [0.14, 0.25])",
        "<path>        JSON problem file with fields p, d, optional x_labels/y_labels",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _parse_lambda_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if count < 2 or not start < stop:
        raise argparse.ArgumentTypeError("need start < stop and count >= 2")
    return start, stop, count


def _parse_distortions(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_common(parser: argparse.ArgumentParser, needs_distortion: bool = False) -> None:
    parser.add_argument("--source", required=True,
                        help="binary | gaussian | laplacian | bifurcation | problem-file path")
    parser.add_argument("--p", dest="p_one", type=float, default=0.5,
                        help="P(X=1) for the binary source (default 0.5)")
    parser.add_argument("--sigma", type=float, help="scale of the continuous source")
    parser.add_argument("--grid-m", type=float, help="truncation half-width of the grid")
    parser.add_argument("--grid-delta", type=float, help="grid spacing")
    parser.add_argument("--max-iter", type=int, help="solver iteration cap")
    parser.add_argument("--tol", type=float, help="solver residual tolerance (AS)")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None,
                        help="output format")
    parser.add_argument("--seed", type=int, help="recorded in output; reserved "
                        "(all current solvers are deterministic)")
    if needs_distortion:
        parser.add_argument("--distortion", type=_parse_distortions, default=[],
                            help="distortion target (comma-separated list for compare)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratedist",
        description="Rate-distortion curves of discrete memoryless sources: "
        "a distortion-targeted alternating-Sinkhorn solver with a "
        "Blahut-Arimoto baseline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="compute R(D) at a single distortion")
    _add_common(sp, needs_distortion=True)
    sp.add_argument("--solver", choices=("as", "ba", "both"), default="as")
    sp.add_argument("--include-law", action="store_true",
                    help="embed the transition law and output marginal in the result")
    sp.set_defaults(func=cmd_solve, default_fmt="json")

    sp = sub.add_parser("curve", help="sweep a distortion or slope grid")
    _add_common(sp)
    sp.add_argument("--solver", choices=("as", "ba"), default="as")
    sp.add_argument("--dmin", type=float, help="sweep start (AS)")
    sp.add_argument("--dmax", type=float, help="sweep end (AS)")
    sp.add_argument("--points", type=int, default=25, help="sweep size (AS, default 25)")
    sp.add_argument("--lambda-grid", type=_parse_lambda_grid,
                    help="start:stop:count arithmetic slope grid (BA)")
    sp.set_defaults(func=cmd_curve, default_fmt="csv")

    sp = sub.add_parser("residuals", help="per-iteration KKT residual trace")
    _add_common(sp, needs_distortion=True)
    sp.set_defaults(func=cmd_residuals, default_fmt="csv")

    sp = sub.add_parser("compare", help="benchmark both solvers at matched targets")
    _add_common(sp, needs_distortion=True)
    sp.add_argument("--repeats", type=int, default=1,
                    help="timing repetitions per case (default 1)")
    sp.set_defaults(func=cmd_compare, default_fmt="csv")

    sp = sub.add_parser("fixtures", help="list built-in sources")
    sp.set_defaults(func=cmd_fixtures, default_fmt="csv")

    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        source=getattr(args, "source", "binary"),
        p_one=getattr(args, "p_one", 0.5),
        sigma=getattr(args, "sigma", None),
        grid_m=getattr(args, "grid_m", None),
        grid_delta=getattr(args, "grid_delta", None),
        solver=getattr(args, "solver", "as"),
        distortions=list(getattr(args, "distortion", []) or []),
        dmin=getattr(args, "dmin", None),
        dmax=getattr(args, "dmax", None),
        points=getattr(args, "points", 25),
        lambda_grid=getattr(args, "lambda_grid", None),
        max_iter=getattr(args, "max_iter", None),
        tol=getattr(args, "tol", None),
        repeats=getattr(args, "repeats", 1),
        out=getattr(args, "out", None),
        fmt=getattr(args, "fmt", None) or getattr(args, "default_fmt", "csv"),
        include_law=getattr(args, "include_law", False),
        seed=getattr(args, "seed", None),
    )


def main(argv: Optional[list[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    config = config_from_args(args)
    try:
        return args.func(config)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
