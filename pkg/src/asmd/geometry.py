"""Proximal geometries on the probability simplex.

Two setups are provided:

* ``euclidean-simplex``: potential ``d(x) = ||x||_2^2 / 2``, primal norm l2,
  prox step realized as a Euclidean projection back onto the simplex.
* ``entropy-simplex``: potential ``d(x) = sum_i x_i log x_i``, primal norm
  l1 (dual l-infinity), prox step realized as a multiplicative update.

Each geometry bundles the pieces a mirror-descent step needs: the potential
and its gradient, the induced divergence ``V(x, y)``, the dual norm used to
measure subgradients, and the prox operator restricted to the simplex.
Geometry values are immutable and all operations are pure functions, so
they can be shared freely between concurrently running solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EUCLIDEAN_SIMPLEX = "euclidean-simplex"
ENTROPY_SIMPLEX = "entropy-simplex"

#: Tolerance for simplex membership checks (sum to one, nonnegativity).
FEASIBILITY_TOL = 1e-8

#: Mixing weight pulling a point off the simplex boundary before logs are
#: taken; small enough to stay below every test tolerance.
INTERIOR_DELTA = 1e-15


@dataclass(frozen=True)
class Geometry:
    """A proximal setup on the n-dimensional probability simplex.

    ``radius_squared`` bounds the divergence from the potential's minimizer
    to any feasible point and enters both the stepsize rule and the
    stopping rule of the solvers.
    """

    dimension: int
    kind: str
    radius_squared: float

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be at least 1, got {self.dimension}")
        if self.kind not in (EUCLIDEAN_SIMPLEX, ENTROPY_SIMPLEX):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if not self.radius_squared > 0:
            raise ValueError(f"radius_squared must be positive, got {self.radius_squared}")

    @property
    def radius(self) -> float:
        return math.sqrt(self.radius_squared)


def euclidean_simplex(dimension: int, radius_squared: float | None = None) -> Geometry:
    """Euclidean setup; the default radius bound 1 covers the simplex,
    since half the squared l2 distance between simplex points is below 1."""
    if radius_squared is None:
        radius_squared = 1.0
    return Geometry(dimension, EUCLIDEAN_SIMPLEX, radius_squared)


def entropy_simplex(dimension: int, radius_squared: float | None = None) -> Geometry:
    """Entropy setup; the default radius bound is log(n).

    The divergence from the uniform point to any simplex point is at most
    log(n), which is the quantity the solver analysis consumes. Over
    arbitrary *pairs* the divergence is unbounded, so log(n) is a working
    convention rather than a uniform bound. For n = 1 the default would
    vanish, so a radius must be supplied explicitly.
    """
    if radius_squared is None:
        if dimension == 1:
            raise ValueError("entropy geometry with n=1 needs an explicit radius_squared")
        radius_squared = math.log(dimension)
    return Geometry(dimension, ENTROPY_SIMPLEX, radius_squared)


def _check_vector(geom: Geometry, v, name: str = "x") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (geom.dimension,):
        raise ValueError(
            f"{name} has shape {v.shape}, expected ({geom.dimension},) for this geometry"
        )
    if not np.isfinite(v).all():
        raise ValueError(f"{name} has non-finite coordinates")
    return v


def on_simplex(x, tol: float = FEASIBILITY_TOL) -> bool:
    """Membership check: coordinates nonnegative and summing to one."""
    x = np.asarray(x, dtype=float)
    return bool(abs(float(x.sum()) - 1.0) <= tol and (x >= -tol).all())


def require_feasible(geom: Geometry, x, name: str = "x") -> np.ndarray:
    x = _check_vector(geom, x, name)
    if not on_simplex(x):
        raise ValueError(f"{name} is not on the probability simplex (tol {FEASIBILITY_TOL})")
    return x


def interior_clamp(x, delta: float = INTERIOR_DELTA) -> np.ndarray:
    """Mix toward the uniform point so every coordinate is at least delta."""
    x = np.asarray(x, dtype=float)
    return (1.0 - x.size * delta) * x + delta


def dgf_value(geom: Geometry, x) -> float:
    """Value of the distance generating potential at a feasible point.

    Euclidean: ``||x||^2 / 2``. Entropy: ``sum x_i log x_i`` with the
    convention ``0 log 0 = 0``.
    """
    x = require_feasible(geom, x)
    if geom.kind == EUCLIDEAN_SIMPLEX:
        return 0.5 * float(x @ x)
    logs = np.zeros_like(x)
    np.log(x, where=x > 0.0, out=logs)
    return float((x * logs).sum())


def dgf_gradient(geom: Geometry, x) -> np.ndarray:
    """Gradient of the potential; entropy input is clamped off the boundary."""
    x = _check_vector(geom, x)
    if geom.kind == EUCLIDEAN_SIMPLEX:
        return x.copy()
    return 1.0 + np.log(interior_clamp(x))


def bregman(geom: Geometry, x, y) -> float:
    """Divergence ``V(x, y) = d(y) - d(x) - <d'(x), y - x>``.

    Closed forms: Euclidean ``||y - x||^2 / 2``; entropy
    ``sum_i y_i log(y_i / x_i)`` with the first argument clamped off the
    boundary so the logs are finite. Nonnegative, and zero exactly when
    the arguments coincide.
    """
    x = _check_vector(geom, x)
    y = _check_vector(geom, y, "y")
    if geom.kind == EUCLIDEAN_SIMPLEX:
        d = y - x
        return 0.5 * float(d @ d)
    xc = interior_clamp(x)
    logs = np.zeros_like(y)
    np.log(y / xc, where=y > 0.0, out=logs)
    return float((y * logs).sum())


def dual_norm(geom: Geometry, g) -> float:
    """Norm of a dual vector (a subgradient): l2 for the Euclidean setup,
    l-infinity for entropy (whose primal norm is l1)."""
    g = _check_vector(geom, g, "g")
    if geom.kind == EUCLIDEAN_SIMPLEX:
        return float(np.linalg.norm(g))
    return float(np.abs(g).max()) if g.size else 0.0


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-and-threshold form, O(n log n), exact up to rounding.
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u * idx > css - 1.0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def prox_map(geom: Geometry, x, y) -> np.ndarray:
    """Mirror update ``argmin_u <y, u> + V(x, u)`` over the simplex.

    Entropy uses the multiplicative closed form
    ``u_i = x_i exp(-y_i) / sum_j x_j exp(-y_j)`` computed in max-shifted
    log space so large inputs cannot overflow; Euclidean projects ``x - y``
    back onto the simplex. The output satisfies the optimality condition
    ``<y + d'(u) - d'(x), v - u> >= 0`` for every feasible v.
    """
    x = require_feasible(geom, x)
    y = _check_vector(geom, y, "y")
    if geom.kind == EUCLIDEAN_SIMPLEX:
        return project_simplex(x - y)
    z = np.log(interior_clamp(x)) - y
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def dgf_minimizer(geom: Geometry) -> np.ndarray:
    """Minimizer of the potential over the simplex: the uniform point for
    both setups (by symmetry)."""
    n = geom.dimension
    return np.full(n, 1.0 / n)
