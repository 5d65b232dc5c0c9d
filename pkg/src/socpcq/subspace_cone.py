"""How a linear image subspace sits relative to the cone.

For the image subspace V = Im(A) the classification is spectral: with an
orthonormal basis B of V and the hyperbolic form J = diag(1, -1, ..., -1),
the restricted symmetric matrix M = B^T J B decides everything.  A positive
top eigenvalue gives an interior point of Q_m inside V; if M is negative
semidefinite its kernel maps to the (at most one) boundary ray of Q_m inside
V; a negative definite M means V meets the cone only at the origin.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError
from .soc_core import DEFAULT_TOL

#: Unit boundary rays have |v0| = sqrt(1/2); anything well below that in the
#: first coordinate cannot be an admissible kernel direction.
_ADMISSIBLE_FLOOR = 0.1


class SubspaceKind(enum.Enum):
    MEETS_INTERIOR = "meets_interior"
    ZERO_ONLY = "zero_only"
    RAY = "ray"


@dataclass(frozen=True)
class SubspaceConeClass:
    """Outcome of the subspace-versus-cone classification.

    ``ray`` is the unit generator with positive first coordinate when
    ``kind`` is RAY; ``witness`` is a unit interior point of the cone inside
    the subspace when ``kind`` is MEETS_INTERIOR.  ``marginal`` flags
    tolerance-ambiguous spectra (top eigenvalue inside the tolerance band
    with no admissible kernel direction, or a multiple near-kernel).
    """

    kind: SubspaceKind
    ray: Optional[np.ndarray] = None
    witness: Optional[np.ndarray] = None
    marginal: bool = False
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _validated_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {A.shape}")
    if A.shape[0] < 2:
        raise DimensionError("matrix must map into R^m with m >= 2")
    if not np.all(np.isfinite(A)):
        raise DimensionError("matrix has non-finite entries")
    return A


def numeric_rank(A, tol: float = DEFAULT_TOL) -> int:
    """Rank by singular-value threshold tol * sigma_max (zero matrix -> 0)."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    sigma = np.linalg.svd(A, compute_uv=False)
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0
    return int(np.sum(sigma > tol * sigma[0]))


def image_basis(A, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``A`` as an (m, k) array."""
    A = _validated_matrix(A)
    u, sigma, _ = np.linalg.svd(A, full_matrices=False)
    if sigma.size == 0 or sigma[0] <= 0.0:
        return np.zeros((A.shape[0], 0))
    k = int(np.sum(sigma > tol * sigma[0]))
    return u[:, :k]


def classify_image_vs_cone(A, tol: float = DEFAULT_TOL) -> SubspaceConeClass:
    """Classify Im(A) against Q_m: meets the interior, a single ray, or {0}."""
    A = _validated_matrix(A)
    B = image_basis(A, tol)
    k = B.shape[1]
    if k == 0:
        return SubspaceConeClass(SubspaceKind.ZERO_ONLY)
    # Restricted hyperbolic form; eigenvalues lie in [-1, 1] because B is
    # orthonormal and J is an isometry.
    JB = B.copy()
    JB[1:, :] *= -1.0
    M = B.T @ JB
    eigvals, eigvecs = np.linalg.eigh(M)
    lam_max = float(eigvals[-1])

    if lam_max > tol:
        w = B @ eigvecs[:, -1]
        if w[0] < 0.0:
            w = -w
        return SubspaceConeClass(
            SubspaceKind.MEETS_INTERIOR, witness=w, eigenvalues=eigvals
        )

    # M is negative semidefinite within tolerance.  Kernel directions with a
    # nonzero first coordinate generate boundary rays; a pointedness argument
    # shows at most one such direction can exist exactly.
    null_idx = [i for i in range(k) if abs(float(eigvals[i])) <= tol]
    admissible = []
    for i in null_idx:
        w = B @ eigvecs[:, i]
        if abs(float(w[0])) > _ADMISSIBLE_FLOOR:
            admissible.append((abs(float(eigvals[i])), w))
    if not admissible:
        marginal = bool(null_idx)  # near-null spectrum but no usable direction
        return SubspaceConeClass(
            SubspaceKind.ZERO_ONLY, marginal=marginal, eigenvalues=eigvals
        )
    admissible.sort(key=lambda item: item[0])
    _, w = admissible[0]
    if w[0] < 0.0:
        w = -w
    v = w / np.linalg.norm(w)
    return SubspaceConeClass(
        SubspaceKind.RAY,
        ray=v,
        marginal=len(admissible) > 1,
        eigenvalues=eigvals,
    )


def image_equals_line(A, v, tol: float = DEFAULT_TOL) -> bool:
    """Is Im(A) exactly the line spanned by ``v``?"""
    A = _validated_matrix(A)
    v = np.asarray(v, dtype=float)
    if v.shape != (A.shape[0],):
        raise DimensionError(
            f"direction has shape {v.shape}, expected ({A.shape[0]},)"
        )
    norm_v = float(np.linalg.norm(v))
    if norm_v <= 0.0 or not np.all(np.isfinite(v)):
        raise DimensionError("direction must be nonzero and finite")
    if numeric_rank(A, tol) != 1:
        return False
    b1 = image_basis(A, tol)[:, 0]
    residual = v - (b1 @ v) * b1
    return float(np.linalg.norm(residual)) <= tol * norm_v
