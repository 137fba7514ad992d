"""Command-line front end: solve, sweep, diagnose, gen.

Exit codes: 0 solved, 1 usage or I/O or validation error, 2 infeasible,
3 iteration limit.  Single solves write deterministic JSON result files;
sweeps and diagnostics write CSV tables (those include wall-clock
columns and are not byte-reproducible).
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import fileformats, rotation, solvers
from .core import (
    InfeasibleError,
    InvariantError,
    IterationLimitError,
    MKLabError,
    ShapeError,
    TransportPlan,
)
from .diagnostics import (
    LP_TOL,
    check_strong_ccm,
    singular_mass_estimate,
    telescoping_bound_check,
)
from .fileformats import AUTO_SHIFT, FileFormatError, InstanceSpec, Problem

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_ITERATIONS = 3

DEFAULT_BOUND_EPS = (1e-2, 1e-4)
DEFAULT_SINGULAR_EPS = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_DELTAS = (0.5, 0.2, 0.1, 0.05, 0.02, 0.01)


class UsageError(MKLabError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _fmt(value: float) -> str:
    text = format(float(value), ".17g")
    if not any(ch in text for ch in ".eE") and "inf" not in text:
        text += ".0"
    return text


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from exc


def _load_problem(path: str) -> tuple[InstanceSpec, Problem, dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    spec = fileformats.parse_instance(text)
    problem = fileformats.materialize(spec)
    return spec, problem, fileformats.instance_to_jsonable(spec)


def _config(args: argparse.Namespace) -> solvers.SolverConfig:
    kwargs = {}
    if getattr(args, "tol", None) is not None:
        kwargs["feasibility_tol"] = args.tol
        kwargs["optimality_tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        kwargs["max_iterations"] = args.max_iter
    return solvers.SolverConfig(**kwargs)


def _reference_plan(problem: Problem) -> TransportPlan:
    if problem.reference_plan is None:
        raise UsageError(
            "this problem needs a reference plan; add a \"pi0\" matrix to the "
            "explicit instance file")
    return problem.reference_plan


def _write_text(path: Optional[str], text: str) -> None:
    if path is None:
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# solve


def _cmd_solve(args: argparse.Namespace) -> int:
    spec, problem, instance_doc = _load_problem(args.instance)
    cfg = _config(args)
    name, _, param = args.problem.partition(":")
    eps = None
    if name in ("partial", "relaxed-dual"):
        if not param:
            raise UsageError(f"problem {name} needs a parameter, e.g. {name}:0.1")
        try:
            eps = float(param)
        except ValueError as exc:
            raise UsageError(f"bad epsilon {param!r}") from exc
    elif param:
        raise UsageError(f"problem {name} takes no parameter")

    if name == "primal":
        report = solvers.solve_primal(problem.cost, problem.mu, problem.nu, cfg)
    elif name == "dual":
        report = solvers.solve_dual(problem.cost, problem.mu, problem.nu, cfg)
    elif name == "partial":
        report = solvers.solve_partial(problem.cost, problem.mu, problem.nu, eps, cfg)
    elif name == "restricted":
        report = solvers.solve_restricted_primal(problem.cost, _reference_plan(problem), cfg)
    elif name == "relaxed-dual":
        report = solvers.solve_relaxed_dual(
            problem.cost, problem.mu, problem.nu, _reference_plan(problem), eps, cfg)
    else:
        raise UsageError(f"unknown problem {args.problem!r}")

    pots = report.optimal_potentials
    doc = fileformats.result_document(
        args.problem,
        {"feasibility_tol": cfg.feasibility_tol, "optimality_tol": cfg.optimality_tol,
         "max_iterations": cfg.max_iterations},
        instance_doc,
        primal_value=report.primal_value, dual_value=report.dual_value,
        gap=report.gap, plan=report.optimal_plan,
        phi=None if pots is None else pots.phi,
        psi=None if pots is None else pots.psi,
        iterations=report.stats.iterations, pivots=report.stats.pivots)
    _write_text(args.out, fileformats.serialize_result(doc))
    print(f"problem        {args.problem}")
    print(f"primal value   {_fmt(report.primal_value)}")
    print(f"dual value     {_fmt(report.dual_value)}")
    print(f"gap            {_fmt(report.gap)}")
    print(f"iterations     {report.stats.iterations}")
    print(f"pivots         {report.stats.pivots}")
    print(f"wall ms        {report.stats.wall_ms:.3f}")
    if args.out:
        print(f"result         {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _scaled_spec(spec: InstanceSpec, n: int) -> InstanceSpec:
    if spec.kind == "explicit":
        raise UsageError("n-scaling needs an ap or ex33 instance")
    k_max = spec.k_max
    if k_max is not None:
        k_max = n - 1 if k_max == (spec.n or 0) - 1 else min(k_max, n - 1)
    return InstanceSpec(kind=spec.kind, n=n, shift=AUTO_SHIFT, k_max=k_max,
                        seed=spec.seed)


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec, problem, _ = _load_problem(args.instance)
    cfg = _config(args)
    if not args.grid:
        raise UsageError("sweep needs --grid")
    rows: list[list[str]] = []

    if args.sweep in ("epsilon-primal", "epsilon-dual"):
        grid = _parse_grid(args.grid)
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise UsageError("epsilon grid must be strictly decreasing")
        values = []
        for eps in grid:
            t0 = time.perf_counter()
            if args.sweep == "epsilon-primal":
                report = solvers.solve_partial(problem.cost, problem.mu, problem.nu, eps, cfg)
                value = report.primal_value
            else:
                report = solvers.solve_relaxed_dual(
                    problem.cost, problem.mu, problem.nu, _reference_plan(problem), eps, cfg)
                value = report.dual_value
            wall = (time.perf_counter() - t0) * 1e3
            values.append(value)
            rows.append([_fmt(eps), _fmt(value), str(report.stats.iterations), f"{wall:.3f}"])
        limit = solvers.extrapolate_to_zero(tuple(grid), tuple(values))
        rows.append([_fmt(0.0), _fmt(limit), "0", "0.000"])
    elif args.sweep == "n-scaling":
        grid_n = [int(v) for v in _parse_grid(args.grid)]
        if any(b <= a for a, b in zip(grid_n, grid_n[1:])) or any(v < 4 for v in grid_n):
            raise UsageError("n grid must be strictly increasing integers >= 4")
        for n in grid_n:
            scaled = fileformats.materialize(_scaled_spec(spec, n))
            t0 = time.perf_counter()
            report = solvers.solve_primal(scaled.cost, scaled.mu, scaled.nu, cfg)
            wall = (time.perf_counter() - t0) * 1e3
            rows.append([str(n), _fmt(report.primal_value),
                         str(report.stats.iterations), f"{wall:.3f}"])
    else:
        raise UsageError(f"unknown sweep {args.sweep!r}")

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "value", "iterations", "wall_ms"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# diagnose


def _cmd_diagnose(args: argparse.Namespace) -> int:
    spec, problem, _ = _load_problem(args.instance)
    cfg = _config(args)
    rows: list[list[str]] = []

    if args.diag == "ccm":
        report = solvers.solve_primal(problem.cost, problem.mu, problem.nu, cfg)
        result = check_strong_ccm(problem.cost, report.optimal_plan,
                                  report.optimal_potentials, LP_TOL)
        header = ["check", "passed", "witness_i", "witness_j"]
        wi, wj = ("", "") if result.witness is None else result.witness
        rows.append(["strong-ccm", str(result.passed).lower(), str(wi), str(wj)])
    elif args.diag == "bound":
        if spec.kind != "ap" or problem.rotation is None:
            raise UsageError("the bound diagnostic needs an ap instance")
        inst = problem.rotation
        eps_list = _parse_grid(args.grid) if args.grid else list(DEFAULT_BOUND_EPS)
        k_max = args.k_max if args.k_max is not None else min(5, inst.n - 1)
        pots = solvers.dual_sequence(problem.cost, problem.mu, problem.nu,
                                     _reference_plan(problem), eps_list, cfg)
        levels = rotation.birkhoff_levels(inst, k_max)
        records = telescoping_bound_check(inst, problem.cost, pots, levels, k_max)
        header = ["sequence_index", "k", "lhs", "rhs", "passed"]
        for rec in records:
            rows.append([str(rec.sequence_index), str(rec.k), _fmt(rec.lhs),
                         _fmt(rec.rhs), str(rec.passed).lower()])
    elif args.diag == "singular":
        pi0 = _reference_plan(problem)
        pots = solvers.dual_sequence(problem.cost, problem.mu, problem.nu, pi0,
                                     list(DEFAULT_SINGULAR_EPS), cfg)
        if problem.rotation is not None and spec.kind == "ex33":
            h_ref = rotation.level_matrix(problem.rotation, problem.k_max)
        else:
            h_ref = problem.cost.entries
        deltas = _parse_grid(args.grid) if args.grid else list(DEFAULT_DELTAS)
        diag = singular_mass_estimate(pi0, pots, h_ref, deltas)
        header = ["record", "index", "value"]
        for i, v in enumerate(diag.l1_distances_to_limit):
            rows.append(["l1_distance", str(i), _fmt(v)])
        for i, v in enumerate(diag.positive_part_norms):
            rows.append(["positive_part", str(i), _fmt(v)])
        for delta, v in diag.small_set_profile:
            rows.append(["small_set", _fmt(delta), _fmt(v)])
        rows.append(["estimate", "", _fmt(diag.singular_mass_estimate)])
    else:
        raise UsageError(f"unknown diagnostic {args.diag!r}")

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.kind == "explicit":
        if args.seed is not None:
            size = args.n or 4
            rng = np.random.default_rng(args.seed)
            cost = np.round(rng.uniform(0.0, 5.0, size=(size, size)), 6)
            mu = rng.uniform(0.2, 1.0, size)
            nu = rng.uniform(0.2, 1.0, size)
            spec = InstanceSpec(kind="explicit", cost=cost, mu=mu / mu.sum(),
                                nu=nu / nu.sum(), seed=args.seed)
        else:
            spec = InstanceSpec(
                kind="explicit",
                cost=np.array([[0.0, float("inf")], [1.0, 0.0]]),
                mu=np.array([0.5, 0.5]), nu=np.array([0.5, 0.5]))
    else:
        if args.n is None:
            raise UsageError(f"gen --kind {args.kind} needs --n")
        shift: object = AUTO_SHIFT if args.shift in (None, AUTO_SHIFT) else int(args.shift)
        spec = InstanceSpec(kind=args.kind, n=args.n, shift=shift,
                            k_max=args.k_max, seed=args.seed)
    fileformats.materialize(spec)  # validate before writing
    text = fileformats.dumps_canonical(fileformats.instance_to_jsonable(spec))
    _write_text(args.out, text)
    if args.out:
        print(f"wrote {args.kind} instance to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mklab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one problem on one instance")
    solve.add_argument("instance")
    solve.add_argument("--problem", required=True,
                       help="primal | dual | partial:EPS | restricted | relaxed-dual:EPS")
    solve.add_argument("--out", help="result JSON path")
    solve.add_argument("--tol", type=float)
    solve.add_argument("--max-iter", type=int)
    solve.set_defaults(func=_cmd_solve)

    sweep = sub.add_parser("sweep", help="run a parameter sweep, write CSV")
    sweep.add_argument("instance")
    sweep.add_argument("--sweep", required=True,
                       choices=["epsilon-primal", "epsilon-dual", "n-scaling"])
    sweep.add_argument("--grid", required=True, help="comma-separated grid values")
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--tol", type=float)
    sweep.add_argument("--max-iter", type=int)
    sweep.set_defaults(func=_cmd_sweep)

    diagnose = sub.add_parser("diagnose", help="run a diagnostic, write CSV")
    diagnose.add_argument("instance")
    diagnose.add_argument("--diag", required=True, choices=["ccm", "bound", "singular"])
    diagnose.add_argument("--out", required=True)
    diagnose.add_argument("--grid", help="eps list (bound) or delta list (singular)")
    diagnose.add_argument("--k-max", type=int, dest="k_max")
    diagnose.add_argument("--tol", type=float)
    diagnose.add_argument("--max-iter", type=int)
    diagnose.set_defaults(func=_cmd_diagnose)

    gen = sub.add_parser("gen", help="write a template instance file")
    gen.add_argument("--kind", required=True, choices=list(fileformats.KINDS))
    gen.add_argument("--n", type=int)
    gen.add_argument("--shift", help=f'integer or "{AUTO_SHIFT}"')
    gen.add_argument("--k-max", type=int, dest="k_max")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out")
    gen.set_defaults(func=_cmd_gen)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormatError, InvariantError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IterationLimitError as exc:
        print(f"iteration limit: {exc}", file=sys.stderr)
        return EXIT_ITERATIONS


if __name__ == "__main__":
    sys.exit(main())
