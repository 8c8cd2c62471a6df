"""First-order oracles for simplex-constrained problems.

Objectives come in two flavors. ``QuadraticObjective`` is the form
``x' A x / 2`` with exact gradient ``A x`` and, alternatively, a
column-sampling estimator: one column of A drawn with probability given by
the current simplex point is an unbiased estimate of the gradient at O(n)
cost. ``LinearObjective`` is ``<c, x>`` with a constant gradient.

``MaxLinearConstraint`` is a pointwise maximum of affine forms evaluated
exactly; it is stored as sparse directions plus scalar offsets so the raw
sparsity of the data survives the feasibility shift applied by instance
generators.

Oracles are immutable after construction. Randomness is confined to
``RngStream`` objects owned by each solver run, so concurrent runs with
distinct streams never interact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import FEASIBILITY_TOL

OBJECTIVE = "objective"
CONSTRAINT = "constraint"


@dataclass
class RngStream:
    """Deterministic random stream: same seed and same query sequence give
    the same samples bit for bit."""

    seed: int
    draws: int = field(default=0, init=False)

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self._gen = np.random.Generator(np.random.PCG64(int(self.seed)))

    def uniform(self, size: int | None = None):
        """Uniform draws in [0, 1); a sized call consumes the stream exactly
        like the same number of scalar calls."""
        self.draws += 1 if size is None else int(size)
        return self._gen.random(size=size)


@dataclass(frozen=True)
class OracleSample:
    """One oracle reply: a subgradient sample and which function it is for."""

    gradient: np.ndarray
    which: str

    def __post_init__(self):
        if self.which not in (OBJECTIVE, CONSTRAINT):
            raise ValueError(f"unknown sample kind {self.which!r}")
        if not np.isfinite(self.gradient).all():
            raise ValueError("oracle sample has non-finite components")


def _as_distribution(x) -> np.ndarray:
    """Clip round-off negatives to zero and renormalize to a distribution."""
    x = np.asarray(x, dtype=float)
    if (x < -FEASIBILITY_TOL).any():
        raise ValueError("point has negative coordinates beyond the feasibility tolerance")
    p = np.maximum(x, 0.0)
    total = float(p.sum())
    if total <= 0.0:
        raise ValueError("cannot sample an index: no positive mass after clipping")
    return p


def sample_simplex_index(x, rng: RngStream) -> int:
    """Draw index i with probability x_i via one uniform and a CDF scan.

    Indices carrying zero mass are never returned.
    """
    cdf = np.cumsum(_as_distribution(x))
    u = rng.uniform() * cdf[-1]
    return int(np.searchsorted(cdf, u, side="right"))


def sample_simplex_indices(x, rng: RngStream, size: int) -> np.ndarray:
    """Vectorized form of ``sample_simplex_index`` reading one stream block."""
    cdf = np.cumsum(_as_distribution(x))
    u = rng.uniform(size=size) * cdf[-1]
    return np.searchsorted(cdf, u, side="right")


class QuadraticObjective:
    """Quadratic form ``x' A x / 2`` with gradient ``A x``.

    The stored matrix is kept exactly symmetric so the gradient formula is
    exact: asymmetric input is replaced by ``(A + A') / 2`` (which leaves
    the quadratic form unchanged) and ``symmetrized`` records that this
    happened.
    """

    def __init__(self, matrix):
        a = np.array(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"matrix must be square, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise ValueError("matrix has non-finite entries")
        self.symmetrized = bool(a.size) and float(np.abs(a - a.T).max()) > 0.0
        if self.symmetrized:
            a = 0.5 * (a + a.T)
        self.matrix = a
        self.dimension = a.shape[0]

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dimension},)")
        return x

    def value(self, x) -> float:
        x = self._check(x)
        return 0.5 * float(x @ (self.matrix @ x))

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        return 0.5 * ((points @ self.matrix) * points).sum(axis=1)

    def gradient(self, x) -> np.ndarray:
        """Exact gradient ``A x`` (O(n^2) dense)."""
        return self.matrix @ self._check(x)

    def column(self, i: int) -> np.ndarray:
        return self.matrix[:, i].copy()

    def column_sample(self, x, rng: RngStream) -> np.ndarray:
        """Unbiased O(n) gradient estimate: column i of A drawn with
        probability x_i. Requires x to be (numerically) a distribution."""
        return self.column(sample_simplex_index(self._check(x), rng))


class LinearObjective:
    """Linear objective ``<c, x>`` with constant exact gradient c."""

    def __init__(self, coefficients):
        c = np.array(coefficients, dtype=float)
        if c.ndim != 1:
            raise ValueError("coefficients must be a vector")
        if not np.isfinite(c).all():
            raise ValueError("coefficients have non-finite entries")
        self.coefficients = c
        self.dimension = c.size

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dimension},)")
        return x

    def value(self, x) -> float:
        return float(np.dot(self.coefficients, self._check(x)))

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        return points @ self.coefficients

    def gradient(self, x) -> np.ndarray:
        self._check(x)
        return self.coefficients.copy()


class MaxLinearConstraint:
    """Pointwise maximum of affine forms ``g(x) = max_m (<c_m, x> - b_m)``.

    Directions are stored sparsely as (indices, values) pairs with the
    scalar offsets kept separate. The dense direction associated with term
    m is ``c_m - b_m * ones``; on the simplex it induces the same function
    values and prox updates as the sparse pair, and it is the vector whose
    dual norm the solver records. Argmax ties break to the smallest index
    so traces are reproducible (any maximizer is a valid subgradient).

    Evaluation is exact and deterministic: this oracle is the zero-noise
    special case of the sampling contract.
    """

    def __init__(self, sparse_terms, offsets, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be at least 1")
        offs = np.array(offsets, dtype=float)
        if offs.ndim != 1 or offs.size < 1:
            raise ValueError("offsets must be a non-empty vector")
        if not np.isfinite(offs).all():
            raise ValueError("offsets have non-finite entries")
        if len(sparse_terms) != offs.size:
            raise ValueError(
                f"{len(sparse_terms)} sparse terms but {offs.size} offsets"
            )
        terms = []
        for pos, (indices, values) in enumerate(sparse_terms):
            idx = np.array(indices, dtype=np.int64).reshape(-1)
            val = np.array(values, dtype=float).reshape(-1)
            if idx.size != val.size:
                raise ValueError(f"term {pos}: {idx.size} indices but {val.size} values")
            if idx.size and (idx.min() < 0 or idx.max() >= dimension):
                raise ValueError(f"term {pos}: index out of range for dimension {dimension}")
            if not np.isfinite(val).all():
                raise ValueError(f"term {pos}: non-finite values")
            terms.append((idx, val))
        self.dimension = dimension
        self.terms = terms
        self.offsets = offs
        dense = np.zeros((offs.size, dimension))
        for m, (idx, val) in enumerate(terms):
            np.add.at(dense[m], idx, val)
        dense -= offs[:, None]
        self._dense = dense

    @property
    def count(self) -> int:
        return len(self.terms)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dimension},)")
        return x

    def values(self, x) -> np.ndarray:
        """All affine term values at x, computed through the sparse pairs."""
        x = self._check(x)
        return np.array(
            [float(np.dot(val, x[idx])) for idx, val in self.terms]
        ) - self.offsets

    def value(self, x) -> float:
        return float(self.values(x).max())

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        out = np.full(points.shape[0], -np.inf)
        for (idx, val), b in zip(self.terms, self.offsets):
            row = points[:, idx] @ val - b if idx.size else np.full(points.shape[0], -b)
            np.maximum(out, row, out=out)
        return out

    def argmax_term(self, x) -> int:
        """Index of the active term; ties resolve to the smallest index."""
        return int(np.argmax(self.values(x)))

    def subgradient(self, x) -> np.ndarray:
        """Dense subgradient: the shifted direction of the active term."""
        return self._dense[self.argmax_term(x)].copy()

    def sparse_subgradient(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Sparse (indices, values) of the active term, without the offset
        shift. On the simplex the shift is a multiple of the all-ones
        vector, which prox updates ignore, so applying this pair reproduces
        the dense subgradient's update."""
        idx, val = self.terms[self.argmax_term(x)]
        return idx.copy(), val.copy()

    def dense_directions(self) -> np.ndarray:
        """All shifted directions ``c_m - b_m * ones`` as rows."""
        return self._dense.copy()


@dataclass(frozen=True)
class UnbiasednessReport:
    """Empirical mean of column samples against the exact gradient."""

    empirical_mean: np.ndarray
    reference: np.ndarray
    max_abs_deviation: float
    stderr: np.ndarray
    samples: int


def unbiasedness_report(
    objective: QuadraticObjective, x, samples: int, rng: RngStream
) -> UnbiasednessReport:
    """Statistical check that column sampling averages to the gradient.

    Draws ``samples`` columns at x, compares their componentwise mean with
    ``A x`` and reports the per-component standard error of the mean, so a
    caller can apply a central-limit bound such as deviation <= 4 stderr.
    """
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    x = np.asarray(x, dtype=float)
    idx = sample_simplex_indices(x, rng, samples)
    counts = np.bincount(idx, minlength=objective.dimension).astype(float)
    cols = objective.matrix
    mean = cols @ counts / samples
    var = ((cols - mean[:, None]) ** 2) @ counts / (samples - 1)
    stderr = np.sqrt(var / samples)
    reference = objective.gradient(x)
    deviation = float(np.abs(mean - reference).max())
    return UnbiasednessReport(
        empirical_mean=mean,
        reference=reference,
        max_abs_deviation=deviation,
        stderr=stderr,
        samples=samples,
    )
