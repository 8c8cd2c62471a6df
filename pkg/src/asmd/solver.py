"""Mirror descent with functional constraints on the simplex.

The solvers run the productive / non-productive loop: at each iterate the
exact constraint value is inspected; if it is within the accuracy target
the step uses an objective subgradient sample and the iterate joins the
averaging set, otherwise the step uses the constraint subgradient to pull
the iterate back toward feasibility. The returned point is the average of
the productive iterates.

Two stepsize policies are provided. ``solve_adaptive`` divides the
geometry's radius by the root of the accumulated squared sample norms and
stops once ``(2 R / k) sqrt(sum M_i^2)`` falls to the accuracy target.
``solve_fixed`` is the classical baseline: a constant stepsize and a
precomputed iteration budget derived from a uniform subgradient bound.

A single solve is strictly sequential; concurrent solves are safe because
problems and geometries are immutable and each run owns its own random
stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .geometry import (
    ENTROPY_SIMPLEX,
    Geometry,
    bregman,
    dgf_minimizer,
    dual_norm,
    on_simplex,
    prox_map,
)
from .oracle import RngStream
from .problems import ProblemInstance

ADAPTIVE = "adaptive"
FIXED = "fixed"

CRITERION_MET = "criterion_met"
CAP_REACHED = "cap_reached"


class InfeasibleRunError(RuntimeError):
    """A run finished without a single productive iteration."""


class InvariantViolation(RuntimeError):
    """A per-step runtime check failed with checking enabled."""


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters shared by both stepsize policies.

    ``epsilon`` doubles as the productivity threshold and the stopping
    threshold, exactly as in the update rule. ``fixed_M`` is the uniform
    subgradient bound the fixed policy needs. ``max_iterations`` caps the
    adaptive loop; when omitted, a safety cap of ten times the worst-case
    count (with the largest sample norm seen so far standing in for the
    uniform bound) is maintained on the fly.
    """

    epsilon: float
    max_iterations: int | None = None
    seed: int = 0
    variant: str = ADAPTIVE
    fixed_M: float | None = None
    record_trace: bool = True
    check_invariants: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.variant not in (ADAPTIVE, FIXED):
            raise ValueError(f"variant must be '{ADAPTIVE}' or '{FIXED}', got {self.variant!r}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if self.variant == FIXED and (self.fixed_M is None or not self.fixed_M > 0):
            raise ValueError("the fixed variant needs a positive fixed_M bound")


@dataclass(frozen=True)
class IterationRecord:
    """One row of a run trace."""

    k: int
    productive: bool
    M_k: float
    h_k: float
    g_value: float
    f_value: float | None = None


@dataclass(frozen=True)
class RunResult:
    """Outcome of a solve: the averaged point plus counters and the trace.

    ``M_bar`` is the root mean square of the recorded sample norms.
    """

    x_bar: np.ndarray
    N: int
    N_I: int
    stop_reason: str
    trace: list[IterationRecord]
    M_bar: float


@dataclass(frozen=True)
class StepState:
    """Everything observable about one iteration, for diagnostics.

    ``gradient`` is the dense sample whose dual norm was recorded; for
    non-productive entropy steps the update itself may have applied the
    sparse constraint term, which produces the same next iterate.
    ``stopped`` marks the iteration at which the variant's stopping rule
    fired.
    """

    k: int
    x: np.ndarray
    productive: bool
    g_value: float
    f_value: float | None
    gradient: np.ndarray
    M: float
    h: float
    x_next: np.ndarray
    sum_M_sq: float
    stopped: bool


def step_size(radius: float, m_history: Sequence[float]) -> float:
    """Adaptive stepsize: radius over the root of the accumulated squared
    sample norms. Raises when the accumulation is still zero (degenerate
    gradients); callers stop instead, since the stopping rule is already
    satisfied then."""
    total = float(np.sum(np.square(np.asarray(m_history, dtype=float))))
    if total <= 0.0:
        raise ZeroDivisionError("all sample norms so far are zero")
    return radius / math.sqrt(total)


def stopping_criterion(radius: float, k: int, sum_m_sq: float, epsilon: float) -> bool:
    """True once ``(2 R / k) sqrt(sum M_i^2)`` is within the target."""
    if k < 1:
        raise ValueError("step index must be at least 1")
    return (2.0 * radius / k) * math.sqrt(sum_m_sq) <= epsilon


def worst_case_iterations(M: float, R: float, epsilon: float, variant: str = ADAPTIVE) -> int:
    """Iteration count sufficient under a uniform subgradient bound M:
    ``ceil(4 M^2 R^2 / eps^2)`` for the adaptive policy and
    ``ceil(2 M^2 R^2 / eps^2)`` for the fixed baseline."""
    if not (M > 0 and R > 0 and epsilon > 0):
        raise ValueError("M, R and epsilon must all be positive")
    factor = 4.0 if variant == ADAPTIVE else 2.0
    if variant not in (ADAPTIVE, FIXED):
        raise ValueError(f"unknown variant {variant!r}")
    return math.ceil(factor * M * M * R * R / (epsilon * epsilon))


def mirror_descent_steps(problem: ProblemInstance, config: SolverConfig) -> Iterator[StepState]:
    """Drive the loop, yielding one StepState per iteration.

    The generator terminates right after yielding the step on which the
    stopping rule fired, or silently once the adaptive safety cap is
    exhausted (the caller then reports the cap). The fixed policy runs its
    precomputed budget exactly.
    """
    geom = problem.geometry()
    radius = geom.radius
    rng = RngStream(config.seed)
    x = dgf_minimizer(geom)
    entropy = geom.kind == ENTROPY_SIMPLEX
    if config.variant == FIXED:
        bound = float(config.fixed_M)
        budget = worst_case_iterations(bound, radius, config.epsilon, FIXED)
        h_fixed = config.epsilon / (bound * bound)
    sum_m_sq = 0.0
    m_max = 0.0
    k = 0
    while True:
        k += 1
        g_value = problem.constraint_value(x)
        productive = g_value <= config.epsilon
        if productive:
            sample = problem.objective_sample(x, rng)
        else:
            sample = problem.constraint_sample(x)
        m_k = dual_norm(geom, sample.gradient)
        sum_m_sq += m_k * m_k
        m_max = max(m_max, m_k)
        applied = sample.gradient
        if not productive and entropy:
            # the offset shift is a multiple of the all-ones vector, which
            # the entropy prox ignores; apply the sparse term instead
            idx, val = problem.constraint_sparse_subgradient(x)
            applied = np.zeros(geom.dimension)
            applied[idx] = val
        if config.variant == ADAPTIVE:
            if sum_m_sq > 0.0:
                h = radius / math.sqrt(sum_m_sq)
                x_next = prox_map(geom, x, h * applied)
            else:
                # degenerate: every sample so far was zero, so the stopping
                # rule below fires and the iterate never moves
                h = math.inf
                x_next = x
            stopped = stopping_criterion(radius, k, sum_m_sq, config.epsilon)
        else:
            h = h_fixed
            x_next = prox_map(geom, x, h * applied)
            stopped = k >= budget
        yield StepState(
            k=k,
            x=x,
            productive=productive,
            g_value=g_value,
            f_value=problem.objective_value(x),
            gradient=sample.gradient,
            M=m_k,
            h=h,
            x_next=x_next,
            sum_M_sq=sum_m_sq,
            stopped=stopped,
        )
        if stopped:
            return
        if config.variant == ADAPTIVE:
            if config.max_iterations is not None:
                if k >= config.max_iterations:
                    return
            elif k >= 10 * worst_case_iterations(m_max, radius, config.epsilon, ADAPTIVE):
                return
        x = x_next


class _StepChecker:
    """Per-step runtime checks, enabled by ``check_invariants``.

    Feasibility of every iterate is always verified; for deterministic
    oracles the one-step descent inequality is also verified against the
    instance's witness, and the telescoped trace bound at the end.
    """

    def __init__(self, problem: ProblemInstance, geom: Geometry, epsilon: float):
        self.problem = problem
        self.geom = geom
        self.epsilon = epsilon
        self.deterministic = problem.is_deterministic
        self.ref = problem.feasible_witness
        self.f_ref = problem.objective_value(self.ref)
        self.g_ref = problem.constraint_value(self.ref)

    def check(self, st: StepState) -> None:
        if not on_simplex(st.x_next):
            raise InvariantViolation(f"iterate {st.k + 1} left the simplex")
        if st.productive != (st.g_value <= self.epsilon):
            raise InvariantViolation(f"productive flag inconsistent at step {st.k}")
        if self.deterministic and math.isfinite(st.h):
            gap = (st.f_value - self.f_ref) if st.productive else (st.g_value - self.g_ref)
            resid = mirror_step_residual(
                self.geom, st.x, st.x_next, self.ref, st.gradient, st.h, gap
            )
            if resid < -1e-8:
                raise InvariantViolation(
                    f"step inequality violated at step {st.k}: residual {resid:.3e}"
                )

    def check_trace(self, trace: list[IterationRecord]) -> None:
        if self.deterministic and trace:
            report = telescoping_bound_check(trace, self.geom, self.problem, self.ref)
            if not report.holds:
                raise InvariantViolation(
                    f"trace bound violated: lhs {report.lhs:.6e} > rhs {report.rhs:.6e}"
                )


def _drive(problem: ProblemInstance, config: SolverConfig) -> RunResult:
    geom = problem.geometry()
    checker = _StepChecker(problem, geom, config.epsilon) if config.check_invariants else None
    accum = np.zeros(problem.dimension)
    n_total = 0
    n_productive = 0
    sum_m_sq = 0.0
    stop_reason = CAP_REACHED
    trace: list[IterationRecord] = []
    for st in mirror_descent_steps(problem, config):
        n_total = st.k
        sum_m_sq = st.sum_M_sq
        if st.productive:
            accum += st.x
            n_productive += 1
        if config.record_trace:
            trace.append(
                IterationRecord(st.k, st.productive, st.M, st.h, st.g_value, st.f_value)
            )
        if checker is not None:
            checker.check(st)
        if st.stopped:
            stop_reason = CRITERION_MET
    if n_productive == 0:
        raise InfeasibleRunError(
            f"no productive iteration in {n_total} steps at epsilon={config.epsilon}; "
            "the averaged point is undefined"
        )
    if checker is not None:
        checker.check_trace(trace)
    return RunResult(
        x_bar=accum / n_productive,
        N=n_total,
        N_I=n_productive,
        stop_reason=stop_reason,
        trace=trace,
        M_bar=math.sqrt(sum_m_sq / n_total),
    )


def solve_adaptive(problem: ProblemInstance, config: SolverConfig) -> RunResult:
    """Run the adaptive-stepsize loop until its stopping rule fires.

    On a ``criterion_met`` exit with exact oracles the averaged point is
    within ``epsilon`` of the optimal value and violates the constraint by
    at most ``epsilon``; with sampled gradients the objective guarantee
    holds on average over seeds while the constraint guarantee still holds
    per run. A ``cap_reached`` result is returned (not raised) so callers
    can inspect the partial run.
    """
    if config.variant != ADAPTIVE:
        raise ValueError(f"config.variant is {config.variant!r}; expected '{ADAPTIVE}'")
    return _drive(problem, config)


def solve_fixed(problem: ProblemInstance, config: SolverConfig) -> RunResult:
    """Run the constant-stepsize baseline for its full precomputed budget.

    The stepsize is ``epsilon / fixed_M^2`` and the budget is
    ``ceil(2 fixed_M^2 R^2 / epsilon^2)`` with the geometry's radius
    standing in for the (unknowable) divergence to the solution; the run
    completes the budget and reports ``criterion_met``.
    """
    if config.variant != FIXED:
        raise ValueError(f"config.variant is {config.variant!r}; expected '{FIXED}'")
    return _drive(problem, config)


# -- analysis checks ---------------------------------------------------------


def stepsum_gap(alpha) -> float:
    """Slack in ``sum_k a_k / sqrt(S_k) <= 2 sqrt(S_N)`` for nonnegative a,
    where ``S_k`` is the running sum. This inequality is what makes the
    adaptive stepsizes telescope. Terms whose running sum is still zero
    contribute nothing (their numerators are necessarily zero too)."""
    a = np.asarray(alpha, dtype=float)
    if a.size and float(a.min()) < 0:
        raise ValueError("sequence must be nonnegative")
    if a.size == 0:
        return 0.0
    s = np.cumsum(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(s > 0.0, a / np.sqrt(s), 0.0)
    return 2.0 * math.sqrt(float(s[-1])) - float(terms.sum())


def mirror_step_residual(
    geom: Geometry, x_k, x_next, ref, grad, h: float, f_gap: float
) -> float:
    """Slack in the one-step prox inequality against a reference point.

    For an exact subgradient step ``x_next = prox(x_k, h grad)`` of a
    convex function, the quantity

        (V(x_k, ref) - V(x_next, ref)) / h + h ||grad||_*^2 / 2

    dominates the gap ``f(x_k) - f(ref)``; the return value is that bound
    minus the supplied gap and is nonnegative whenever the sample equals a
    true subgradient. With noisy samples it may go negative by the noise
    term's magnitude.
    """
    if not h > 0:
        raise ValueError(f"stepsize must be positive, got {h}")
    v_now = bregman(geom, x_k, ref)
    v_next = bregman(geom, x_next, ref)
    m = dual_norm(geom, np.asarray(grad, dtype=float))
    return (v_now - v_next) / h + 0.5 * h * m * m - float(f_gap)


@dataclass(frozen=True)
class TelescopingReport:
    lhs: float
    rhs: float
    holds: bool


def telescoping_bound_check(
    trace: Sequence[IterationRecord], geom: Geometry, problem: ProblemInstance, ref
) -> TelescopingReport:
    """Compare the summed gaps of a deterministic run with the telescoped
    stepsize bound.

    The left side sums objective gaps over productive steps and constraint
    gaps over the rest, both against the reference point; the right side is
    ``2 R sqrt(sum M_k^2)``. The reference must be feasible with a
    nonpositive constraint value, and the trace must carry objective values
    (exact-evaluation problems record them on every step).
    """
    if not trace:
        raise ValueError("trace is empty")
    ref = np.asarray(ref, dtype=float)
    if not on_simplex(ref):
        raise ValueError("reference point is not on the simplex")
    g_ref = problem.constraint_value(ref)
    if g_ref > 0:
        raise ValueError("reference point must satisfy the constraint")
    f_ref = problem.objective_value(ref)
    lhs = 0.0
    total = 0.0
    for rec in trace:
        total += rec.M_k * rec.M_k
        if rec.productive:
            if rec.f_value is None:
                raise ValueError("trace lacks objective values on productive steps")
            lhs += rec.f_value - f_ref
        else:
            lhs += rec.g_value - g_ref
    rhs = 2.0 * geom.radius * math.sqrt(total)
    return TelescopingReport(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + 1e-8))


def min_step_residual(
    problem: ProblemInstance, config: SolverConfig, refs: Sequence[np.ndarray]
) -> float:
    """Smallest one-step residual over a replayed run and reference points.

    Replays the run the config describes (deterministic oracles only, so
    the replay is exact) and evaluates ``mirror_step_residual`` against
    every reference at every step, reusing the divergence of the shared
    iterate chain. The degenerate all-zero-gradient step, if any, is
    skipped: its stepsize is infinite and the iterate does not move.
    """
    if not problem.is_deterministic:
        raise ValueError("step residuals are meaningful for deterministic oracles only")
    geom = problem.geometry()
    refs = [np.asarray(r, dtype=float) for r in refs]
    f_refs = [problem.objective_value(r) for r in refs]
    g_refs = [problem.constraint_value(r) for r in refs]
    best = math.inf
    v_now = None
    for st in mirror_descent_steps(problem, config):
        if v_now is None:
            v_now = [bregman(geom, st.x, r) for r in refs]
        v_next = [bregman(geom, st.x_next, r) for r in refs]
        if math.isfinite(st.h):
            half_step = 0.5 * st.h * st.M * st.M
            for i in range(len(refs)):
                gap = (st.f_value - f_refs[i]) if st.productive else (st.g_value - g_refs[i])
                resid = (v_now[i] - v_next[i]) / st.h + half_step - gap
                if resid < best:
                    best = resid
        v_now = v_next
    return best
