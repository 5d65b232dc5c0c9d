"""Affine second-order cone constraints g(x) = Ax + b in Q_m.

Holds the instance data plus the pointwise reduction machinery: on the
positive boundary the constraint reduces to the smooth scalar inequality
phi(x) = g0(x) - ||gr(x)|| >= 0, at the vertex it stays conic, and at
interior points it is locally inactive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, InfeasiblePointError, SingularReductionError
from .soc_core import (
    DEFAULT_TOL,
    ConeLocation,
    as_cone_vector,
    classify_cone_point,
    distance_to_cone,
    reflected,
)


@dataclass(frozen=True)
class AffineSOCInstance:
    """The constraint data: A is m-by-n, b in R^m, feasibility is Ax+b in Q_m."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2:
            raise DimensionError(f"A must be a matrix, got shape {A.shape}")
        m, n = A.shape
        if m < 2:
            raise DimensionError(
                f"m = {m} is out of scope; the cone needs m >= 2"
            )
        if n < 1:
            raise DimensionError("A needs at least one column")
        if b.shape != (m,):
            raise DimensionError(f"b has shape {b.shape}, expected ({m},)")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise DimensionError("instance data has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"point has shape {x.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(x)):
            raise DimensionError("point has non-finite entries")
        return x

    def evaluate(self, x) -> np.ndarray:
        """g(x) = Ax + b."""
        return self.A @ self.point(x) + self.b

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        """g at the rows of an (N, n) array, returned as (N, m)."""
        return np.asarray(X, dtype=float) @ self.A.T + self.b


class ReductionKind(enum.Enum):
    INTERIOR_CASE = "interior_case"   # constraint locally inactive
    BOUNDARY_CASE = "boundary_case"   # scalar reduction phi >= 0, cone R+
    ZERO_CASE = "zero_case"           # identity reduction, cone Q_m


@dataclass(frozen=True)
class ReductionInfo:
    kind: ReductionKind
    phi_value: Optional[float] = None
    grad_phi: Optional[np.ndarray] = None


@dataclass(frozen=True)
class PointAnalysis:
    instance: AffineSOCInstance
    x: np.ndarray
    y: np.ndarray
    location: ConeLocation
    reduction: ReductionInfo


def phi(instance: AffineSOCInstance, x) -> float:
    """The concave margin g0(x) - ||gr(x)||; feasibility is phi(x) >= 0."""
    y = instance.evaluate(x)
    return float(y[0] - np.linalg.norm(y[1:]))


def grad_phi(instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Gradient of phi at x: A0 - (gr(x)/||gr(x)||)^T Ar.

    Defined only where gr(x) is safely nonzero.
    """
    y = instance.evaluate(x)
    norm_r = float(np.linalg.norm(y[1:]))
    if norm_r <= tol * max(1.0, float(np.linalg.norm(y))):
        raise SingularReductionError(
            f"gr(x) has norm {norm_r:.3e}; the scalar reduction is singular here"
        )
    return instance.A[0] - (y[1:] / norm_r) @ instance.A[1:]


def grad_phi_many(instance: AffineSOCInstance, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise grad phi for an (N, n) array.

    Returns (G, ok) where rows of G are gradients and ok flags rows where
    gr(x) != 0; rows with ok == False are zero-filled.
    """
    Y = instance.evaluate_many(X)
    norms = np.linalg.norm(Y[:, 1:], axis=1)
    ok = norms > DEFAULT_TOL * np.maximum(1.0, np.linalg.norm(Y, axis=1))
    G = np.zeros((Y.shape[0], instance.n))
    if np.any(ok):
        unit = Y[ok, 1:] / norms[ok, None]
        G[ok] = instance.A[0] - unit @ instance.A[1:]
    return G, ok


def analyze_point(
    instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL
) -> PointAnalysis:
    """Classify g(x) and cache the reduction data; rejects infeasible points."""
    x = instance.point(x)
    y = instance.evaluate(x)
    loc = classify_cone_point(y, tol)
    if loc is ConeLocation.OUTSIDE:
        raise InfeasiblePointError(
            f"g(x) lies outside the cone (distance {distance_to_cone(y):.3e})",
            distance_to_cone(y),
        )
    if loc is ConeLocation.INTERIOR:
        reduction = ReductionInfo(ReductionKind.INTERIOR_CASE)
    elif loc is ConeLocation.ZERO:
        reduction = ReductionInfo(ReductionKind.ZERO_CASE)
    else:
        reduction = ReductionInfo(
            ReductionKind.BOUNDARY_CASE,
            phi_value=phi(instance, x),
            grad_phi=grad_phi(instance, x, tol),
        )
    return PointAnalysis(instance, x, y, loc, reduction)


class HSetKind(enum.Enum):
    ZERO_ONLY = "zero_only"
    RAY_IMAGE = "ray_image"
    CONE_IMAGE = "cone_image"


@dataclass(frozen=True)
class HSetDescription:
    """The set A^T N(g(x)) of multiplier images at a feasible point.

    ``ZERO_ONLY`` is {0} (interior points); ``RAY_IMAGE`` is the half-line
    of nonnegative multiples of ``generator`` = A^T(-y0, yr) (boundary
    points); ``CONE_IMAGE`` is A^T(-Q_m) (vertex), whose closedness is the
    point of the analysis and is filled in by the checker.
    """

    kind: HSetKind
    generator: Optional[np.ndarray] = None
    closed: Optional[bool] = None


def h_set_description(
    instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL
) -> HSetDescription:
    analysis = analyze_point(instance, x, tol)
    if analysis.location is ConeLocation.INTERIOR:
        return HSetDescription(HSetKind.ZERO_ONLY)
    if analysis.location is ConeLocation.ZERO:
        return HSetDescription(HSetKind.CONE_IMAGE)
    gen = instance.A.T @ reflected(analysis.y)
    return HSetDescription(HSetKind.RAY_IMAGE, generator=gen)


def linearization_cone_membership(
    instance: AffineSOCInstance, x, d, tol: float = DEFAULT_TOL
) -> bool:
    """Is ``d`` in the linearized feasible cone at the feasible point ``x``?"""
    analysis = analyze_point(instance, x, tol)
    d = np.asarray(d, dtype=float)
    if d.shape != (instance.n,):
        raise DimensionError(f"direction has shape {d.shape}, expected ({instance.n},)")
    if analysis.location is ConeLocation.INTERIOR:
        return True
    if analysis.location is ConeLocation.ZERO:
        image = as_cone_vector(instance.A @ d)
        return classify_cone_point(image, tol) is not ConeLocation.OUTSIDE
    g = analysis.reduction.grad_phi
    scale = max(1.0, float(np.linalg.norm(g)) * float(np.linalg.norm(d)))
    return float(g @ d) >= -tol * scale


@dataclass(frozen=True)
class VanishingCertificate:
    """Witness that g(x) = (w^T x + c)(1, u) with ||u|| = 1.

    When this factorization exists and w^T xbar + c > 0 the scalar
    reduction phi vanishes identically near xbar.
    """

    u: np.ndarray
    w: np.ndarray
    c: float


def vanishing_reduction_test(
    instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL
) -> Optional[VanishingCertificate]:
    """Certificate that phi vanishes on a neighborhood of the boundary point x.

    For affine g this happens exactly when every column of A is parallel to
    g(x); the factorization is then read off the first row of (A, b).
    """
    analysis = analyze_point(instance, x, tol)
    if analysis.location is not ConeLocation.POSITIVE_BOUNDARY:
        raise InfeasiblePointError(
            "vanishing reduction is only defined on the positive boundary",
            0.0,
        )
    y = analysis.y
    norm_y_sq = float(y @ y)
    residual = instance.A - np.outer(y, (y @ instance.A) / norm_y_sq)
    a_norm = float(np.linalg.norm(instance.A))
    if float(np.linalg.norm(residual)) > tol * max(1.0, a_norm):
        return None
    u = y[1:] / np.linalg.norm(y[1:])
    return VanishingCertificate(u=u, w=instance.A[0].copy(), c=float(instance.b[0]))
