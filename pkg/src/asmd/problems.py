"""Problem instances: construction, random generation, file round-trips,
and a brute-force grid reference usable in small dimensions.

An instance couples an objective, a max-linear constraint, a geometry
selection, an oracle mode and a stored strictly feasible witness point.
The witness certifies that the constraint set meets the simplex, which
the solvers' guarantees presuppose.

Instance files are JSON documents written through the canonical serializer
(17 significant digits), so save/load round-trips are bit-exact and
regeneration with the same arguments is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geom_mod
from .geometry import Geometry, dual_norm, on_simplex
from .oracle import (
    CONSTRAINT,
    OBJECTIVE,
    LinearObjective,
    MaxLinearConstraint,
    OracleSample,
    QuadraticObjective,
    RngStream,
)
from .serialize import atomic_write_text, canonical_json

GEOMETRY_KINDS = ("entropy", "euclidean")
ORACLE_MODES = ("exact", "column")

_GEOMETRY_FACTORY = {
    "entropy": geom_mod.entropy_simplex,
    "euclidean": geom_mod.euclidean_simplex,
}


class InstanceFormatError(ValueError):
    """An instance file is malformed; the message names the offending field."""


class InstanceValidationError(ValueError):
    """Instance data is structurally sound but internally inconsistent."""


@dataclass
class ProblemInstance:
    name: str
    dimension: int
    objective: QuadraticObjective | LinearObjective
    constraint: MaxLinearConstraint
    geometry_kind: str
    oracle_mode: str
    feasible_witness: np.ndarray
    margin: float

    def __post_init__(self):
        self.feasible_witness = np.asarray(self.feasible_witness, dtype=float)
        self.validate()

    def validate(self) -> None:
        if self.geometry_kind not in GEOMETRY_KINDS:
            raise InstanceValidationError(
                f"geometry must be one of {GEOMETRY_KINDS}, got {self.geometry_kind!r}"
            )
        if self.oracle_mode not in ORACLE_MODES:
            raise InstanceValidationError(
                f"oracle must be one of {ORACLE_MODES}, got {self.oracle_mode!r}"
            )
        if self.dimension < 1:
            raise InstanceValidationError(f"dimension must be positive, got {self.dimension}")
        if self.objective.dimension != self.dimension:
            raise InstanceValidationError(
                f"objective dimension {self.objective.dimension} != n = {self.dimension}"
            )
        if self.constraint.dimension != self.dimension:
            raise InstanceValidationError(
                f"constraint dimension {self.constraint.dimension} != n = {self.dimension}"
            )
        if self.feasible_witness.shape != (self.dimension,):
            raise InstanceValidationError(
                f"witness has shape {self.feasible_witness.shape}, expected ({self.dimension},)"
            )
        if self.oracle_mode == "column" and not isinstance(self.objective, QuadraticObjective):
            raise InstanceValidationError("column sampling needs a quadratic objective")
        if not math.isfinite(self.margin) or self.margin < 0:
            raise InstanceValidationError(f"margin must be a finite nonnegative real, got {self.margin}")
        if not on_simplex(self.feasible_witness):
            raise InstanceValidationError("witness is not on the probability simplex")
        if self.constraint.value(self.feasible_witness) > 0:
            raise InstanceValidationError("witness violates the constraint")

    # -- solver-facing oracle surface -------------------------------------

    def geometry(self) -> Geometry:
        return _GEOMETRY_FACTORY[self.geometry_kind](self.dimension)

    @property
    def is_deterministic(self) -> bool:
        return self.oracle_mode == "exact"

    def objective_value(self, x) -> float:
        return self.objective.value(x)

    def objective_gradient(self, x) -> np.ndarray:
        return self.objective.gradient(x)

    def objective_sample(self, x, rng: RngStream) -> OracleSample:
        if self.oracle_mode == "column":
            return OracleSample(self.objective.column_sample(x, rng), OBJECTIVE)
        return OracleSample(self.objective.gradient(x), OBJECTIVE)

    def constraint_value(self, x) -> float:
        return self.constraint.value(x)

    def constraint_sample(self, x) -> OracleSample:
        return OracleSample(self.constraint.subgradient(x), CONSTRAINT)

    def constraint_sparse_subgradient(self, x) -> tuple[np.ndarray, np.ndarray]:
        return self.constraint.sparse_subgradient(x)


def generate_instance(
    n: int,
    m_count: int = 10,
    density: float = 0.1,
    margin: float = 0.05,
    seed: int = 0,
    geometry: str = "entropy",
    oracle: str = "exact",
    name: str | None = None,
) -> ProblemInstance:
    """Random quadratic-over-simplex instance with max-linear constraints.

    The matrix is the symmetric part of a density-masked standard normal
    matrix; constraint directions are masked normals stored sparsely. Each
    direction is shifted by a scalar offset so a witness point drawn
    uniformly from the simplex satisfies every constraint with slack
    ``margin``. The stored margin is the achieved slack ``-g(witness)``,
    which equals the requested one up to one rounding and makes the
    identity ``constraint value at witness == -margin`` hold exactly.

    Identical arguments reproduce the instance bit for bit.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if m_count < 1:
        raise ValueError(f"m_count must be at least 1, got {m_count}")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    if not margin > 0:
        raise ValueError(f"margin must be positive, got {margin}")
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
    objective = QuadraticObjective(0.5 * (b + b.T))
    raw_terms = []
    for _ in range(m_count):
        vals = rng.standard_normal(n)
        idx = np.flatnonzero(rng.random(n) < density)
        raw_terms.append((idx, vals[idx]))
    witness = rng.dirichlet(np.ones(n))
    offsets = [float(np.dot(val, witness[idx])) + margin for idx, val in raw_terms]
    constraint = MaxLinearConstraint(raw_terms, offsets, n)
    achieved = -constraint.value(witness)
    if name is None:
        name = f"quad-simplex-n{n}-m{m_count}-seed{seed}"
    return ProblemInstance(
        name=name,
        dimension=n,
        objective=objective,
        constraint=constraint,
        geometry_kind=geometry,
        oracle_mode=oracle,
        feasible_witness=witness,
        margin=achieved,
    )


# -- file format -----------------------------------------------------------


def problem_to_document(p: ProblemInstance) -> dict:
    if isinstance(p.objective, QuadraticObjective):
        objective = {"type": "quadratic", "A": p.objective.matrix.tolist()}
    else:
        objective = {"type": "linear", "c": p.objective.coefficients.tolist()}
    return {
        "name": p.name,
        "n": p.dimension,
        "objective": objective,
        "constraints": {
            "sparse": [
                {"indices": idx.tolist(), "values": val.tolist()}
                for idx, val in p.constraint.terms
            ],
            "offsets": p.constraint.offsets.tolist(),
        },
        "geometry": p.geometry_kind,
        "oracle": p.oracle_mode,
        "witness": p.feasible_witness.tolist(),
        "margin": p.margin,
    }


def _field(doc: dict, key: str, where: str = "document"):
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"field '{where}' must be an object")
    if key not in doc:
        raise InstanceFormatError(f"field '{where}.{key}' is missing")
    return doc[key]


def problem_from_document(doc) -> ProblemInstance:
    n = _field(doc, "n")
    if not isinstance(n, int) or n < 1:
        raise InstanceFormatError(f"field 'n' must be a positive integer, got {n!r}")
    objective_doc = _field(doc, "objective")
    obj_type = _field(objective_doc, "type", "objective")
    if obj_type == "quadratic":
        if "A" in objective_doc:
            matrix = np.array(objective_doc["A"], dtype=float)
            if matrix.shape != (n, n):
                raise InstanceValidationError(
                    f"field 'objective.A' has shape {matrix.shape}, expected ({n}, {n})"
                )
        elif "triplets" in objective_doc:
            matrix = np.zeros((n, n))
            for pos, triplet in enumerate(objective_doc["triplets"]):
                try:
                    i, j, v = triplet
                except (TypeError, ValueError):
                    raise InstanceFormatError(
                        f"field 'objective.triplets[{pos}]' must be [i, j, value]"
                    ) from None
                if not (0 <= int(i) < n and 0 <= int(j) < n):
                    raise InstanceValidationError(
                        f"field 'objective.triplets[{pos}]' index out of range for n={n}"
                    )
                matrix[int(i), int(j)] += float(v)
        else:
            raise InstanceFormatError("field 'objective' needs 'A' or 'triplets'")
        objective = QuadraticObjective(matrix)
    elif obj_type == "linear":
        c = np.array(_field(objective_doc, "c", "objective"), dtype=float)
        if c.shape != (n,):
            raise InstanceValidationError(
                f"field 'objective.c' has length {c.size}, expected {n}"
            )
        objective = LinearObjective(c)
    else:
        raise InstanceFormatError(
            f"field 'objective.type' must be 'quadratic' or 'linear', got {obj_type!r}"
        )
    constraints_doc = _field(doc, "constraints")
    sparse = _field(constraints_doc, "sparse", "constraints")
    offsets = _field(constraints_doc, "offsets", "constraints")
    terms = []
    for pos, term in enumerate(sparse):
        terms.append(
            (
                _field(term, "indices", f"constraints.sparse[{pos}]"),
                _field(term, "values", f"constraints.sparse[{pos}]"),
            )
        )
    try:
        constraint = MaxLinearConstraint(terms, offsets, n)
    except ValueError as exc:
        raise InstanceValidationError(f"field 'constraints': {exc}") from None
    try:
        return ProblemInstance(
            name=str(_field(doc, "name")),
            dimension=n,
            objective=objective,
            constraint=constraint,
            geometry_kind=_field(doc, "geometry"),
            oracle_mode=_field(doc, "oracle"),
            feasible_witness=np.array(_field(doc, "witness"), dtype=float),
            margin=float(_field(doc, "margin")),
        )
    except InstanceValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(str(exc)) from None


def save_problem(p: ProblemInstance, path) -> None:
    atomic_write_text(path, canonical_json(problem_to_document(p)))


def load_problem(path) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"not valid JSON: {exc}") from None
    return problem_from_document(doc)


# -- brute-force reference -------------------------------------------------


@dataclass(frozen=True)
class ReferenceOptimum:
    f_star: float
    x_star: np.ndarray
    resolution: float
    feasible_points: int


def default_resolution(n: int) -> float:
    """Grid spacing keeping the lattice enumerable at desk scale."""
    return 1e-3 if n <= 3 else 1e-2


def _simplex_lattice(n: int, k: int) -> np.ndarray:
    """Integer compositions of k into n nonnegative parts, as rows."""
    if n == 1:
        return np.array([[k]], dtype=np.int64)
    if n == 2:
        left = np.arange(k + 1, dtype=np.int64)
        return np.stack([left, k - left], axis=1)
    blocks = []
    for first in range(k + 1):
        rest = _simplex_lattice(n - 1, k - first)
        col = np.full((rest.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.hstack([col, rest]))
    return np.vstack(blocks)


def reference_optimum(p: ProblemInstance, resolution: float | None = None) -> ReferenceOptimum:
    """Exhaustive minimum of the objective over feasible simplex grid points.

    Scans the lattice with the given spacing, keeps points whose constraint
    value is nonpositive and returns the best objective value among them.
    The result overestimates the true optimum by at most the objective's
    Lipschitz constant times the resolution (in the grid neighborhood of
    the solution). Only supported for n <= 4; the lattice is combinatorial.

    Halving the resolution refines the lattice in place (every coarse point
    stays on the fine grid), so the reported value never degrades.
    """
    n = p.dimension
    if n > 4:
        raise ValueError("grid reference is limited to n <= 4")
    if resolution is None:
        resolution = default_resolution(n)
    if not 0 < resolution <= 1:
        raise ValueError(f"resolution must be in (0, 1], got {resolution}")
    k = int(round(1.0 / resolution))
    points = _simplex_lattice(n, k).astype(float) / k
    feasible = p.constraint.value_batch(points) <= 0.0
    count = int(feasible.sum())
    if count == 0:
        raise InstanceValidationError(
            f"no feasible grid point at resolution {resolution}; refine the grid"
        )
    candidates = points[feasible]
    values = p.objective.value_batch(candidates)
    best = int(np.argmin(values))
    return ReferenceOptimum(
        f_star=float(values[best]),
        x_star=candidates[best].copy(),
        resolution=resolution,
        feasible_points=count,
    )


def uniform_subgradient_bound(p: ProblemInstance) -> float:
    """Bound on the dual norm of every oracle sample over the simplex.

    Objective samples are columns of the matrix or convex combinations of
    them (the exact gradient), so the columnwise maximum covers both oracle
    modes; constraint subgradients are among the dense directions.
    """
    geom = p.geometry()
    if isinstance(p.objective, QuadraticObjective):
        obj = max(dual_norm(geom, col) for col in p.objective.matrix.T)
    else:
        obj = dual_norm(geom, p.objective.coefficients)
    con = max(dual_norm(geom, row) for row in p.constraint.dense_directions())
    return max(obj, con)
