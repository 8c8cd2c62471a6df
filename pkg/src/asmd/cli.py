"""Command line front end.

Subcommands: ``gen`` writes a random instance file, ``solve`` runs a single
solve and writes a result JSON plus an optional CSV trace, ``benchmark``
sweeps variants / oracle modes / seeds and writes a summary CSV, and
``validate`` runs the statistical and analytic property suites against the
bundled fixtures.

Exit codes: 0 success (for ``solve``: the stopping rule fired), 1 I/O or
validation failure, 2 a solve hit the iteration cap (and usage errors, per
argparse convention), 3 a ``validate`` property failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .fixtures import LINEAR_N2, QUADRATIC_N3, load_fixture
from .oracle import QuadraticObjective, RngStream, unbiasedness_report
from .problems import (
    GEOMETRY_KINDS,
    ORACLE_MODES,
    InstanceFormatError,
    InstanceValidationError,
    ProblemInstance,
    generate_instance,
    load_problem,
    reference_optimum,
    save_problem,
    uniform_subgradient_bound,
)
from .serialize import atomic_write_text, canonical_json, format_real, vector_digest
from .solver import (
    ADAPTIVE,
    CRITERION_MET,
    FIXED,
    InfeasibleRunError,
    IterationRecord,
    RunResult,
    SolverConfig,
    min_step_residual,
    solve_adaptive,
    solve_fixed,
    stepsum_gap,
    telescoping_bound_check,
    worst_case_iterations,
)

TRACE_HEADER = ["k", "productive", "M_k", "h_k", "g_value", "f_value"]


def _num(x: float) -> str:
    """CSV/table cell for a float; stepsizes may legitimately be inf."""
    if math.isinf(x):
        return "inf"
    return format_real(x)


def write_trace_csv(trace: list[IterationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for rec in trace:
        writer.writerow(
            [
                rec.k,
                1 if rec.productive else 0,
                _num(rec.M_k),
                _num(rec.h_k),
                _num(rec.g_value),
                "" if rec.f_value is None else _num(rec.f_value),
            ]
        )
    return buf.getvalue()


def _solve_dispatch(problem: ProblemInstance, config: SolverConfig) -> RunResult:
    if config.variant == FIXED:
        return solve_fixed(problem, config)
    return solve_adaptive(problem, config)


# -- gen ---------------------------------------------------------------------


def cmd_gen(args, parser) -> int:
    if args.n < 2:
        parser.error("--n must be at least 2")
    if args.m < 1:
        parser.error("--m must be at least 1")
    problem = generate_instance(
        n=args.n,
        m_count=args.m,
        density=args.density,
        margin=args.margin,
        seed=args.seed,
        geometry=args.geometry,
        oracle=args.oracle,
    )
    save_problem(problem, args.out)
    nnz = sum(idx.size for idx, _ in problem.constraint.terms)
    print(f"wrote {args.out}")
    print(
        f"  name={problem.name} n={problem.dimension} m={problem.constraint.count} "
        f"geometry={problem.geometry_kind} oracle={problem.oracle_mode}"
    )
    print(
        f"  constraint nonzeros={nnz} witness slack={_num(problem.margin)} "
        f"subgradient bound={_num(uniform_subgradient_bound(problem))}"
    )
    return 0


# -- solve --------------------------------------------------------------------


def cmd_solve(args, parser) -> int:
    if args.variant == FIXED and args.fixed_M is None:
        parser.error("--variant fixed requires --fixed-M")
    problem = load_problem(args.problem)
    config = SolverConfig(
        epsilon=args.epsilon,
        max_iterations=args.max_iterations,
        seed=args.seed,
        variant=args.variant,
        fixed_M=args.fixed_M,
    )
    result = _solve_dispatch(problem, config)
    doc = {
        "problem": problem.name,
        "variant": args.variant,
        "epsilon": args.epsilon,
        "seed": args.seed,
        "stop_reason": result.stop_reason,
        "N": result.N,
        "N_I": result.N_I,
        "M_bar": result.M_bar,
        "g_value": problem.constraint_value(result.x_bar),
        "f_value": problem.objective_value(result.x_bar),
        "x_bar_digest": vector_digest(result.x_bar),
        "x_bar": result.x_bar.tolist(),
    }
    if not args.no_timestamp:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if args.result_out:
        atomic_write_text(args.result_out, canonical_json(doc))
    if args.trace_out:
        atomic_write_text(args.trace_out, write_trace_csv(result.trace))
    print(
        f"{result.stop_reason}: N={result.N} N_I={result.N_I} "
        f"M_bar={_num(result.M_bar)} g={_num(doc['g_value'])} f={_num(doc['f_value'])} "
        f"digest={doc['x_bar_digest']}"
    )
    return 0 if result.stop_reason == CRITERION_MET else 2


# -- benchmark ------------------------------------------------------------------

BENCHMARK_HEADER = [
    "variant",
    "oracle_mode",
    "seeds_run",
    "mean_N",
    "mean_N_I",
    "mean_M_bar",
    "mean_f_gap",
    "stderr_f_gap",
    "mean_g_value",
    "worst_case_N",
    "within_bound",
    "status",
]


@dataclasses.dataclass
class BenchmarkRow:
    variant: str
    oracle_mode: str
    seeds_run: int = 0
    mean_N: float = math.nan
    mean_N_I: float = math.nan
    mean_M_bar: float = math.nan
    mean_f_gap: float | None = None
    stderr_f_gap: float | None = None
    mean_g_value: float = math.nan
    worst_case_N: int | None = None
    within_bound: bool | None = None
    status: str = "ok"

    def cells(self) -> list[str]:
        blank = ""
        return [
            self.variant,
            self.oracle_mode,
            str(self.seeds_run),
            blank if math.isnan(self.mean_N) else _num(self.mean_N),
            blank if math.isnan(self.mean_N_I) else _num(self.mean_N_I),
            blank if math.isnan(self.mean_M_bar) else _num(self.mean_M_bar),
            blank if self.mean_f_gap is None else _num(self.mean_f_gap),
            blank if self.stderr_f_gap is None else _num(self.stderr_f_gap),
            blank if math.isnan(self.mean_g_value) else _num(self.mean_g_value),
            blank if self.worst_case_N is None else str(self.worst_case_N),
            blank if self.within_bound is None else ("1" if self.within_bound else "0"),
            self.status,
        ]


def _benchmark_cell_runs(problem, variant, mode, epsilon, seeds, base_seed, fixed_m, jobs):
    """All runs of one (variant, oracle mode) cell; seeds are base + index."""
    cell_problem = dataclasses.replace(problem, oracle_mode=mode)

    def run(i: int) -> RunResult:
        config = SolverConfig(
            epsilon=epsilon,
            seed=base_seed + i,
            variant=variant,
            fixed_M=fixed_m if variant == FIXED else None,
        )
        return _solve_dispatch(cell_problem, config)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, range(seeds)))
    return [run(i) for i in range(seeds)]


def run_benchmark(
    problem: ProblemInstance,
    epsilon: float,
    seeds: int,
    variants: list[str],
    oracle_modes: list[str],
    base_seed: int = 0,
    fixed_m: float | None = None,
    jobs: int = 1,
) -> list[BenchmarkRow]:
    """One summary row per (variant, oracle mode) over a common seed list."""
    geom = problem.geometry()
    reference = None
    if problem.dimension <= 4:
        reference = reference_optimum(problem)
    if fixed_m is None:
        fixed_m = uniform_subgradient_bound(problem)
    rows = []
    for variant in variants:
        for mode in oracle_modes:
            row = BenchmarkRow(variant=variant, oracle_mode=mode)
            try:
                results = _benchmark_cell_runs(
                    problem, variant, mode, epsilon, seeds, base_seed, fixed_m, jobs
                )
            except (InfeasibleRunError, InstanceValidationError, ValueError) as exc:
                row.status = f"error: {exc}"
                rows.append(row)
                continue
            row.seeds_run = len(results)
            row.mean_N = float(np.mean([r.N for r in results]))
            row.mean_N_I = float(np.mean([r.N_I for r in results]))
            row.mean_M_bar = float(np.mean([r.M_bar for r in results]))
            g_values = [problem.constraint_value(r.x_bar) for r in results]
            row.mean_g_value = float(np.mean(g_values))
            if reference is not None:
                gaps = [problem.objective_value(r.x_bar) - reference.f_star for r in results]
                row.mean_f_gap = float(np.mean(gaps))
                row.stderr_f_gap = (
                    float(np.std(gaps, ddof=1) / math.sqrt(len(gaps))) if len(gaps) > 1 else 0.0
                )
            m_hat = max(max((rec.M_k for rec in r.trace), default=0.0) for r in results)
            if m_hat > 0:
                row.worst_case_N = worst_case_iterations(m_hat, geom.radius, epsilon, variant)
                if variant == ADAPTIVE:
                    row.within_bound = all(r.N <= row.worst_case_N for r in results)
            rows.append(row)
    return rows


def _print_table(rows: list[BenchmarkRow]) -> None:
    table = [BENCHMARK_HEADER] + [row.cells() for row in rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(BENCHMARK_HEADER))]
    for line in table:
        print("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())


def cmd_benchmark(args, parser) -> int:
    if args.seeds < 1:
        parser.error("--seeds must be at least 1")
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        if v not in (ADAPTIVE, FIXED):
            parser.error(f"unknown variant {v!r}")
    problem = load_problem(args.problem)
    modes = (
        [m.strip() for m in args.oracle_modes.split(",") if m.strip()]
        if args.oracle_modes
        else [problem.oracle_mode]
    )
    for m in modes:
        if m not in ORACLE_MODES:
            parser.error(f"unknown oracle mode {m!r}")
    rows = run_benchmark(
        problem,
        epsilon=args.epsilon,
        seeds=args.seeds,
        variants=variants,
        oracle_modes=modes,
        base_seed=args.seed,
        fixed_m=args.fixed_M,
        jobs=args.jobs,
    )
    _print_table(rows)
    if args.out:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(BENCHMARK_HEADER)
        for row in rows:
            writer.writerow(row.cells())
        atomic_write_text(args.out, buf.getvalue())
        print(f"wrote {args.out}")
    failed = [row for row in rows if row.status != "ok"]
    return 1 if failed else 0


# -- validate -------------------------------------------------------------------

SUITES = ("unbiasedness", "stepsum", "step-residual", "telescoping")


def _suite_unbiasedness(samples: int, seed: int):
    """Column-sampling means must sit within four standard errors of the
    exact gradient, componentwise (zero-variance components must agree
    exactly)."""
    fixture = load_fixture(QUADRATIC_N3)
    cases = [
        (QuadraticObjective([[0.0, 2.0], [2.0, 0.0]]), np.array([0.5, 0.5])),
        (fixture.objective, fixture.feasible_witness),
        (fixture.objective, np.full(3, 1.0 / 3.0)),
    ]
    worst = 0.0
    for i, (objective, point) in enumerate(cases):
        report = unbiasedness_report(objective, point, samples, RngStream(seed + i))
        dev = np.abs(report.empirical_mean - report.reference)
        for d, s in zip(dev, report.stderr):
            if s == 0.0:
                if d != 0.0:
                    return False, f"zero-variance component deviated by {d:.3e}"
            else:
                worst = max(worst, d / s)
    return worst <= 4.0, f"max |deviation|/stderr = {worst:.3f} (threshold 4)"


def _suite_stepsum(samples: int, seed: int):
    """Random nonnegative sequences across twelve orders of magnitude."""
    rng = np.random.default_rng(seed)
    count = 10_000
    worst = math.inf
    for _ in range(count):
        length = int(rng.integers(1, 101))
        alpha = 10.0 ** rng.uniform(-6.0, 6.0, size=length)
        if rng.random() < 0.1:
            alpha[rng.random(length) < 0.5] = 0.0
        worst = min(worst, stepsum_gap(alpha))
    return worst >= -1e-10, f"min gap = {worst:.3e} over {count} sequences (threshold -1e-10)"


def _validation_runs():
    for name, epsilon in ((QUADRATIC_N3, 0.05), (LINEAR_N2, 0.05)):
        problem = load_fixture(name)
        yield problem, SolverConfig(epsilon=epsilon, seed=0)


def _suite_step_residual(samples: int, seed: int):
    """One-step descent inequality along deterministic runs, checked against
    ten random feasible reference points."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    for problem, config in _validation_runs():
        refs = rng.dirichlet(np.ones(problem.dimension), size=10)
        worst = min(worst, min_step_residual(problem, config, refs))
    return worst >= -1e-8, f"min residual = {worst:.3e} (threshold -1e-8)"


def _suite_telescoping(samples: int, seed: int):
    """Summed run gaps stay under the telescoped stepsize bound."""
    worst = -math.inf
    for problem, config in _validation_runs():
        result = solve_adaptive(problem, config)
        report = telescoping_bound_check(
            result.trace, problem.geometry(), problem, problem.feasible_witness
        )
        if not report.holds:
            return False, f"lhs {report.lhs:.6e} exceeded rhs {report.rhs:.6e}"
        worst = max(worst, report.lhs - report.rhs)
    return True, f"max lhs - rhs = {worst:.3e} (threshold 1e-8)"


def cmd_validate(args, parser) -> int:
    suites = (
        [s.strip() for s in args.suites.split(",") if s.strip()] if args.suites else list(SUITES)
    )
    for s in suites:
        if s not in SUITES:
            parser.error(f"unknown suite {s!r} (choose from {', '.join(SUITES)})")
    runners = {
        "unbiasedness": _suite_unbiasedness,
        "stepsum": _suite_stepsum,
        "step-residual": _suite_step_residual,
        "telescoping": _suite_telescoping,
    }
    all_ok = True
    for name in suites:
        ok, detail = runners[name](args.samples, args.seed)
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name:<14} {detail}")
    return 0 if all_ok else 3


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asmd",
        description="Adaptive stochastic mirror descent for constrained problems on the simplex.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random instance file")
    gen.add_argument("--n", type=int, required=True, help="dimension (at least 2)")
    gen.add_argument("--m", type=int, default=10, help="number of constraint terms")
    gen.add_argument("--density", type=float, default=0.1, help="sparsity density in (0, 1]")
    gen.add_argument("--margin", type=float, default=0.05, help="witness feasibility slack")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--geometry", choices=GEOMETRY_KINDS, default="entropy")
    gen.add_argument("--oracle", choices=ORACLE_MODES, default="exact")
    gen.add_argument("--out", required=True, help="output instance path")
    gen.set_defaults(func=cmd_gen)

    solve = sub.add_parser("solve", help="run one solve and write result/trace files")
    solve.add_argument("--problem", required=True, help="instance file path")
    solve.add_argument("--epsilon", type=float, required=True)
    solve.add_argument("--variant", choices=(ADAPTIVE, FIXED), default=ADAPTIVE)
    solve.add_argument("--fixed-M", type=float, default=None, dest="fixed_M")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--max-iterations", type=int, default=None)
    solve.add_argument("--trace-out", default=None, help="CSV trace path")
    solve.add_argument("--result-out", default=None, help="result JSON path")
    solve.add_argument("--no-timestamp", action="store_true")
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("benchmark", help="multi-seed variant/oracle comparison")
    bench.add_argument("--problem", required=True)
    bench.add_argument("--epsilon", type=float, required=True)
    bench.add_argument("--seeds", type=int, default=10, help="number of seeds per cell")
    bench.add_argument("--seed", type=int, default=0, help="base seed; run i uses base + i")
    bench.add_argument("--variants", default=f"{ADAPTIVE},{FIXED}")
    bench.add_argument("--oracle-modes", default=None, help="default: the instance's mode")
    bench.add_argument("--fixed-M", type=float, default=None, dest="fixed_M",
                       help="default: computed uniform subgradient bound")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out", default=None, help="summary CSV path")
    bench.add_argument("--no-timestamp", action="store_true")
    bench.set_defaults(func=cmd_benchmark)

    val = sub.add_parser("validate", help="statistical and analytic property suites")
    val.add_argument("--suites", default=None, help=f"comma list from: {', '.join(SUITES)}")
    val.add_argument("--samples", type=int, default=100_000)
    val.add_argument("--seed", type=int, default=0)
    val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (
        OSError,
        InstanceFormatError,
        InstanceValidationError,
        InfeasibleRunError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
