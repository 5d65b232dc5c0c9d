"""Certificate-producing decision procedures for constraint qualifications.

Each ``check_*`` routine decides one qualification at a feasible point of
an affine cone constraint and returns a :class:`Verdict` whose ``condition``
names the clause of the governing characterization that fired, together
with enough numeric evidence (gradients, ranks, rays, eigenvalues, moduli)
to re-run the decisive comparison independently.

Condition labels:

* ``Thm3.2(i)``–``Thm3.2(iv)`` — facial constant-rank property (FCR);
* ``Thm4.1(i)``–``Thm4.1(iv)`` — closedness of H(x) = A^T N(g(x));
* ``Thm4.4(i)``–``Thm4.4(vi)`` — constant-rank CQ (CRCQ);
* ``Thm5.1`` — metric subregularity CQ (MSCQ), equivalent to CRCQ here;
* descriptive labels for nondegeneracy and Robinson's CQ.

The failure configurations are pinpointed as well: an FCR failure is
always a degenerate boundary point without the rank-one factorization, and
an H-closedness failure is always the ``Cor 4.2`` geometry (the image
touches the cone in a single boundary ray without equaling its span).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from .affine_instance import (
    AffineSOCInstance,
    HSetDescription,
    PointAnalysis,
    analyze_point,
    h_set_description,
    vanishing_reduction_test,
)
from .soc_core import DEFAULT_TOL, ConeLocation
from .subspace_cone import (
    SubspaceConeClass,
    SubspaceKind,
    classify_image_vs_cone,
    image_equals_line,
    numeric_rank,
)

__all__ = [
    "Verdict",
    "CQReport",
    "check_nondegeneracy",
    "check_rcq",
    "check_fcr",
    "check_h_closed",
    "check_crcq",
    "check_mscq",
    "full_report",
    "verify_report_invariants",
    "minimal_cone_distance_on_image",
]


@dataclass(frozen=True)
class Verdict:
    """Outcome of one qualification check.

    ``holds`` is true exactly when ``condition`` is set; ``evidence`` holds
    the numbers the decision was based on.
    """

    holds: bool
    condition: Optional[str]
    evidence: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.holds != (self.condition is not None):
            raise ValueError("verdict must have a condition iff it holds")


@dataclass(frozen=True)
class CQReport:
    point_analysis: PointAnalysis
    nondegeneracy: Verdict
    rcq: Verdict
    fcr: Verdict
    h_closed: Verdict
    crcq: Verdict
    mscq: Verdict
    h_set: HSetDescription
    derived_claims: tuple[str, ...] = ()


class _Context:
    """Shared per-point state so the six checks analyze only once."""

    def __init__(self, instance: AffineSOCInstance, x, tol: float):
        self.instance = instance
        self.tol = float(tol)
        self.analysis = analyze_point(instance, x, tol)
        self._subspace: Optional[SubspaceConeClass] = None

    @property
    def location(self) -> ConeLocation:
        return self.analysis.location

    @property
    def subspace(self) -> SubspaceConeClass:
        if self._subspace is None:
            self._subspace = classify_image_vs_cone(self.instance.A, self.tol)
        return self._subspace

    def grad_data(self) -> tuple[np.ndarray, float, float]:
        g = self.analysis.reduction.grad_phi
        norm = float(np.linalg.norm(g))
        floor = self.tol * max(1.0, float(np.linalg.norm(self.instance.A)))
        return g, norm, floor


def _margin(analysis: PointAnalysis) -> float:
    y = analysis.y
    return float(y[0] - np.linalg.norm(y[1:]))


# ---------------------------------------------------------------------------
# individual qualifications
# ---------------------------------------------------------------------------


def _nondegeneracy(ctx: _Context) -> Verdict:
    if ctx.location is ConeLocation.INTERIOR:
        return Verdict(True, "interior", {"margin": _margin(ctx.analysis)})
    if ctx.location is ConeLocation.POSITIVE_BOUNDARY:
        g, norm, floor = ctx.grad_data()
        ev = {"grad_phi": g, "grad_norm": norm}
        if norm > floor:
            return Verdict(True, "boundary gradient nonzero", ev)
        return Verdict(False, None, ev)
    rank = numeric_rank(ctx.instance.A, ctx.tol)
    ev = {"rank": rank, "m": ctx.instance.m}
    if rank == ctx.instance.m:
        return Verdict(True, "surjective at vertex", ev)
    return Verdict(False, None, ev)


def _rcq(ctx: _Context) -> Verdict:
    if ctx.location is ConeLocation.INTERIOR:
        return Verdict(True, "interior", {"margin": _margin(ctx.analysis)})
    if ctx.location is ConeLocation.POSITIVE_BOUNDARY:
        g, norm, floor = ctx.grad_data()
        ev = {"grad_phi": g, "grad_norm": norm}
        if norm > floor:
            return Verdict(True, "boundary gradient nonzero", ev)
        return Verdict(False, None, ev)
    cls = ctx.subspace
    ev: dict[str, Any] = {
        "image_class": cls.kind.value,
        "eigenvalues": cls.eigenvalues,
    }
    if cls.kind is SubspaceKind.MEETS_INTERIOR:
        ev["witness"] = cls.witness
        return Verdict(True, "image meets interior", ev)
    if cls.ray is not None:
        ev["ray"] = cls.ray
    return Verdict(False, None, ev)


def _fcr(ctx: _Context) -> Verdict:
    if ctx.location is ConeLocation.ZERO:
        return Verdict(True, "Thm3.2(i)", {"y_norm": float(np.linalg.norm(ctx.analysis.y))})
    if ctx.location is ConeLocation.INTERIOR:
        return Verdict(True, "Thm3.2(ii)", {"margin": _margin(ctx.analysis)})
    g, norm, floor = ctx.grad_data()
    if norm > floor:
        return Verdict(True, "Thm3.2(iii)", {"grad_phi": g, "grad_norm": norm})
    cert = vanishing_reduction_test(ctx.instance, ctx.analysis.x, ctx.tol)
    if cert is not None:
        ev = {
            "grad_norm": norm,
            "certificate_u": cert.u,
            "certificate_w": cert.w,
            "certificate_c": cert.c,
        }
        return Verdict(True, "Thm3.2(iv)", ev)
    y = ctx.analysis.y
    residual = ctx.instance.A - np.outer(y, (y @ ctx.instance.A) / float(y @ y))
    return Verdict(
        False,
        None,
        {"grad_norm": norm, "vanishing_residual": float(np.linalg.norm(residual))},
    )


def _h_closed(ctx: _Context) -> Verdict:
    if ctx.location in (ConeLocation.INTERIOR, ConeLocation.POSITIVE_BOUNDARY):
        return Verdict(True, "Thm4.1(i)", {"y": ctx.analysis.y})
    cls = ctx.subspace
    if cls.kind is SubspaceKind.MEETS_INTERIOR:
        return Verdict(True, "Thm4.1(ii)", {"witness": cls.witness})
    if cls.kind is SubspaceKind.ZERO_ONLY:
        return Verdict(
            True, "Thm4.1(iii)", {"rank": numeric_rank(ctx.instance.A, ctx.tol)}
        )
    rank = numeric_rank(ctx.instance.A, ctx.tol)
    ev: dict[str, Any] = {"ray": cls.ray, "rank": rank}
    if image_equals_line(ctx.instance.A, cls.ray, ctx.tol):
        return Verdict(True, "Thm4.1(iv)", ev)
    ev["reason"] = "Cor 4.2"
    return Verdict(False, None, ev)


def _crcq(ctx: _Context) -> Verdict:
    loc = ctx.location
    if loc is ConeLocation.INTERIOR:
        return Verdict(True, "Thm4.4(i)", {"margin": _margin(ctx.analysis)})
    if loc is ConeLocation.POSITIVE_BOUNDARY:
        g, norm, floor = ctx.grad_data()
        if norm > floor:
            return Verdict(True, "Thm4.4(ii)", {"grad_phi": g, "grad_norm": norm})
        cert = vanishing_reduction_test(ctx.instance, ctx.analysis.x, ctx.tol)
        if cert is not None:
            ev = {
                "grad_norm": norm,
                "certificate_u": cert.u,
                "certificate_w": cert.w,
                "certificate_c": cert.c,
            }
            return Verdict(True, "Thm4.4(iii)", ev)
        y = ctx.analysis.y
        residual = ctx.instance.A - np.outer(y, (y @ ctx.instance.A) / float(y @ y))
        return Verdict(
            False,
            None,
            {
                "grad_norm": norm,
                "vanishing_residual": float(np.linalg.norm(residual)),
            },
        )
    cls = ctx.subspace
    if cls.kind is SubspaceKind.MEETS_INTERIOR:
        return Verdict(
            True,
            "Thm4.4(iv)",
            {"witness": cls.witness, "eigenvalues": cls.eigenvalues},
        )
    if cls.kind is SubspaceKind.ZERO_ONLY:
        return Verdict(
            True,
            "Thm4.4(v)",
            {
                "rank": numeric_rank(ctx.instance.A, ctx.tol),
                "eigenvalues": cls.eigenvalues,
            },
        )
    rank = numeric_rank(ctx.instance.A, ctx.tol)
    ev = {"ray": cls.ray, "rank": rank}
    if image_equals_line(ctx.instance.A, cls.ray, ctx.tol):
        return Verdict(True, "Thm4.4(vi)", ev)
    ev["reason"] = "Cor 4.2"
    return Verdict(False, None, ev)


def minimal_cone_distance_on_image(
    A: np.ndarray, tol: float = DEFAULT_TOL, seed: int = 0
) -> float:
    """min over unit w in Im(A) of dist(w, Q_m), estimated numerically.

    Positive exactly when Im(A) touches the cone only at the origin; used
    as the eta in the flat-case error-bound modulus M/eta.
    """
    from .soc_core import distances_to_cone
    from .subspace_cone import image_basis

    B = image_basis(A, tol)
    k = B.shape[1]
    if k == 0:
        return float("inf")

    def value(Z: np.ndarray) -> np.ndarray:
        return distances_to_cone(Z @ B.T)

    if k == 1:
        return float(min(value(np.array([[1.0], [-1.0]]))))
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((4096, k))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    vals = value(Z)
    order = np.argsort(vals)[:8]
    best = float(vals[order[0]])
    for i in order:
        z = Z[i]
        step = 0.5
        fz = float(value(z[None, :])[0])
        for _ in range(200):
            cand = z[None, :] + step * rng.standard_normal((16, k))
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            cv = value(cand)
            j = int(np.argmin(cv))
            if cv[j] < fz:
                z, fz = cand[j], float(cv[j])
            else:
                step *= 0.6
                if step < 1e-12:
                    break
        best = min(best, fz)
    return best


def _mscq(ctx: _Context, crcq: Verdict) -> Verdict:
    ev = dict(crcq.evidence)
    ev["equivalent_route"] = crcq.condition
    if not crcq.holds:
        return Verdict(False, None, ev)
    A = ctx.instance.A
    if crcq.condition == "Thm4.4(vi)":
        # Rank-one image along a boundary ray: the error-bound modulus is
        # 1/(norm(a) * norm(v)) for any factorization A = v a^T, and that
        # product is the top singular value of A.
        sigma = float(np.linalg.svd(A, compute_uv=False)[0])
        ev["kappa"] = 1.0 / sigma
    elif crcq.condition == "Thm4.4(v)":
        svals = np.linalg.svd(A, compute_uv=False)
        positive = svals[svals > ctx.tol * max(1.0, float(svals[0]))]
        bound_m = 1.0 / float(positive[-1]) if positive.size else float("inf")
        eta = minimal_cone_distance_on_image(A, ctx.tol)
        ev["bound_M"] = bound_m
        ev["eta"] = eta
        ev["kappa_bound"] = bound_m / eta if eta > 0 else float("inf")
    return Verdict(True, "Thm5.1", ev)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def check_nondegeneracy(instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL) -> Verdict:
    return _nondegeneracy(_Context(instance, x, tol))


def check_rcq(instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL) -> Verdict:
    return _rcq(_Context(instance, x, tol))


def check_fcr(instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL) -> Verdict:
    return _fcr(_Context(instance, x, tol))


def check_h_closed(instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL) -> Verdict:
    return _h_closed(_Context(instance, x, tol))


def check_crcq(instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL) -> Verdict:
    return _crcq(_Context(instance, x, tol))


def check_mscq(instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL) -> Verdict:
    ctx = _Context(instance, x, tol)
    return _mscq(ctx, _crcq(ctx))


def full_report(instance: AffineSOCInstance, x, tol: float = DEFAULT_TOL) -> CQReport:
    """All six verdicts at a feasible point, with consistency enforced."""
    ctx = _Context(instance, x, tol)
    crcq = _crcq(ctx)
    hs = h_set_description(instance, ctx.analysis.x, tol)
    h_closed = _h_closed(ctx)
    report = CQReport(
        point_analysis=ctx.analysis,
        nondegeneracy=_nondegeneracy(ctx),
        rcq=_rcq(ctx),
        fcr=_fcr(ctx),
        h_closed=h_closed,
        crcq=crcq,
        mscq=_mscq(ctx, crcq),
        h_set=replace(hs, closed=h_closed.holds),
        derived_claims=(),
    )
    if report.mscq.holds:
        report = replace(
            report,
            derived_claims=(
                "T_Omega(xbar) = L_Omega(xbar)",
                "N_Omega(xbar) = H(xbar)",
            ),
        )
    violations = verify_report_invariants(report)
    if violations:
        raise AssertionError(
            "internal verdict inconsistency: " + "; ".join(violations)
        )
    return report


_ZERO_ONLY_LABELS = {"Thm4.4(iv)", "Thm4.4(v)", "Thm4.4(vi)"}
_NONZERO_LABELS = {"Thm4.4(i)", "Thm4.4(ii)", "Thm4.4(iii)"}


def verify_report_invariants(report: CQReport) -> list[str]:
    """Implication-lattice and label-locality violations (empty = consistent)."""
    out = []
    if report.crcq.holds != (report.fcr.holds and report.h_closed.holds):
        out.append("CRCQ must equal FCR AND H-closed")
    if report.mscq.holds != report.crcq.holds:
        out.append("MSCQ must equal CRCQ")
    if report.nondegeneracy.holds and not report.rcq.holds:
        out.append("nondegeneracy must imply RCQ")
    if report.rcq.holds and not report.mscq.holds:
        out.append("RCQ must imply MSCQ")
    loc = report.point_analysis.location
    label = report.crcq.condition
    if label in _ZERO_ONLY_LABELS and loc is not ConeLocation.ZERO:
        out.append(f"{label} is only valid at the vertex")
    if label in _NONZERO_LABELS and loc is ConeLocation.ZERO:
        out.append(f"{label} is not valid at the vertex")
    if not report.fcr.holds:
        if loc is not ConeLocation.POSITIVE_BOUNDARY:
            out.append("FCR can only fail on the positive boundary")
    return out
