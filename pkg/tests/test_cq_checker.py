"""Qualification verdicts: frozen instance table, labels, evidence, lattice.

The expected verdicts for the four bundled geometries were worked out by
hand from the feasible-set shapes (halfplane, tangent-plane slice,
boundary half-line) and are frozen here; the randomized lattice checks
lean on verify_report_invariants as the single source of implication
rules.
"""

import numpy as np
import pytest

from socpcq import (
    AffineSOCInstance,
    ConeLocation,
    Verdict,
    check_crcq,
    check_fcr,
    check_h_closed,
    check_mscq,
    check_nondegeneracy,
    check_rcq,
    full_report,
    random_instance,
    verify_report_invariants,
)
from socpcq.cq_checker import minimal_cone_distance_on_image

A_HALFPLANE = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
HALFPLANE = AffineSOCInstance(A_HALFPLANE, np.zeros(3))

# g(x) = (x1, x1, x2): same image, one fewer variable
TANGENT_SLICE = AffineSOCInstance(
    np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.zeros(3)
)

# g(x) = x (1, -1, 0): feasible set is the half-line x >= 0
BOUNDARY_LINE = AffineSOCInstance(
    np.array([[1.0], [-1.0], [0.0]]), np.zeros(3)
)


def test_verdict_consistency_enforced():
    with pytest.raises(ValueError):
        Verdict(True, None, {})
    with pytest.raises(ValueError):
        Verdict(False, "Thm4.4(i)", {})
    v = Verdict(True, "Thm4.4(i)", {})
    assert v.holds and v.condition == "Thm4.4(i)"


def test_degenerate_boundary_point_verdicts():
    xbar = np.array([1.0, 0.0, 0.0])
    rep = full_report(HALFPLANE, xbar)
    assert rep.point_analysis.location is ConeLocation.POSITIVE_BOUNDARY
    assert not rep.fcr.holds
    assert not rep.crcq.holds
    assert not rep.mscq.holds
    assert not rep.nondegeneracy.holds
    assert not rep.rcq.holds
    assert rep.h_closed.holds and rep.h_closed.condition == "Thm4.1(i)"
    # failure evidence names both dead ends of the boundary case
    assert rep.fcr.evidence["grad_norm"] == pytest.approx(0.0, abs=1e-12)
    assert rep.fcr.evidence["vanishing_residual"] > 0.1
    assert rep.derived_claims == ()


def test_vertex_of_halfplane_verdicts():
    origin = np.zeros(3)
    rep = full_report(HALFPLANE, origin)
    assert rep.fcr.holds and rep.fcr.condition == "Thm3.2(i)"
    assert not rep.h_closed.holds
    assert rep.h_closed.evidence["reason"] == "Cor 4.2"
    assert rep.h_closed.evidence["rank"] == 2
    np.testing.assert_allclose(
        rep.h_closed.evidence["ray"],
        np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0),
        atol=1e-12,
    )
    assert not rep.crcq.holds and not rep.mscq.holds


def test_fcr_fails_along_degenerate_path():
    for k in range(1, 6):
        v = check_fcr(HALFPLANE, np.array([1.0 / k, 0.0, 0.0]))
        assert not v.holds, k


def test_tangent_slice_vertex():
    rep = full_report(TANGENT_SLICE, np.zeros(2))
    assert rep.fcr.holds and rep.fcr.condition == "Thm3.2(i)"
    assert not rep.h_closed.holds
    assert rep.h_closed.evidence["reason"] == "Cor 4.2"
    assert not rep.crcq.holds and not rep.mscq.holds


def test_boundary_line_vertex():
    rep = full_report(BOUNDARY_LINE, np.zeros(1))
    assert rep.crcq.holds and rep.crcq.condition == "Thm4.4(vi)"
    assert rep.mscq.holds and rep.mscq.condition == "Thm5.1"
    assert rep.h_closed.holds and rep.h_closed.condition == "Thm4.1(iv)"
    # exact modulus 1/sigma_1(A) = 1/sqrt(2)
    assert rep.mscq.evidence["kappa"] == pytest.approx(np.sqrt(0.5), abs=1e-12)
    assert rep.mscq.evidence["equivalent_route"] == "Thm4.4(vi)"
    assert set(rep.derived_claims) == {
        "T_Omega(xbar) = L_Omega(xbar)",
        "N_Omega(xbar) = H(xbar)",
    }


def test_interior_point_everything_holds():
    inst = AffineSOCInstance(np.eye(3), np.array([5.0, 0.0, 0.0]))
    x = np.zeros(3)
    assert check_nondegeneracy(inst, x).holds
    assert check_rcq(inst, x).holds
    assert check_fcr(inst, x).condition == "Thm3.2(ii)"
    assert check_crcq(inst, x).condition == "Thm4.4(i)"
    assert check_mscq(inst, x).holds
    assert check_h_closed(inst, x).condition == "Thm4.1(i)"


def test_boundary_nondegenerate_point():
    # g(x) = (1 + x1, x2, x3) at the origin: smooth boundary, full rank
    inst = AffineSOCInstance(np.eye(3), np.array([1.0, 1.0, 0.0]))
    x = np.zeros(3)
    assert check_nondegeneracy(inst, x).holds
    v = check_crcq(inst, x)
    assert v.holds and v.condition == "Thm4.4(ii)"
    assert v.evidence["grad_norm"] > 0.5


def test_vanishing_boundary_point():
    u = np.array([0.0, 1.0])
    w = np.array([2.0, 0.0, -1.0])
    A = np.outer(np.concatenate([[1.0], u]), w)
    inst = AffineSOCInstance(A, np.concatenate([[1.0], u]))  # c = 1
    x = np.zeros(3)  # w.x + c = 1 > 0
    fcr = check_fcr(inst, x)
    assert fcr.holds and fcr.condition == "Thm3.2(iv)"
    crcq = check_crcq(inst, x)
    assert crcq.holds and crcq.condition == "Thm4.4(iii)"
    np.testing.assert_allclose(crcq.evidence["certificate_u"], u, atol=1e-12)
    mscq = check_mscq(inst, x)
    assert mscq.holds and mscq.condition == "Thm5.1"


def test_zero_only_vertex_bound_evidence():
    # image span{e2, e3} misses the cone: flat feasible set, M/eta bound
    A = np.zeros((3, 2))
    A[1, 0] = 1.0
    A[2, 1] = 1.0
    inst = AffineSOCInstance(A, np.zeros(3))
    v = check_crcq(inst, np.zeros(2))
    assert v.holds and v.condition == "Thm4.4(v)"
    mscq = check_mscq(inst, np.zeros(2))
    assert mscq.holds
    assert mscq.evidence["bound_M"] == pytest.approx(1.0, abs=1e-12)
    assert mscq.evidence["eta"] == pytest.approx(np.sqrt(0.5), abs=1e-9)
    assert mscq.evidence["kappa_bound"] == pytest.approx(np.sqrt(2.0), rel=1e-8)


def test_minimal_cone_distance_on_image_exact_cases():
    # Im = span{e2, e3} in R^3: every unit w has dist = 1/sqrt(2)
    A = np.zeros((3, 2))
    A[1, 0] = 1.0
    A[2, 1] = 1.0
    assert minimal_cone_distance_on_image(A) == pytest.approx(
        np.sqrt(0.5), abs=1e-9
    )
    # one-dimensional image along -e1: closest unit point is +e1 at dist 0
    A1 = np.array([[1.0], [0.0], [0.0]])
    assert minimal_cone_distance_on_image(A1) == pytest.approx(0.0, abs=1e-12)
    assert minimal_cone_distance_on_image(np.zeros((3, 1))) == float("inf")


def test_implication_lattice_on_stratified_instances():
    cases = [
        "Thm4.4(i)",
        "Thm4.4(ii)",
        "Thm4.4(iii)",
        "Thm4.4(iv)",
        "Thm4.4(v)",
        "Thm4.4(vi)",
        "Cor4.2",
        "degenerate-boundary",
    ]
    rng = np.random.default_rng(99)
    for i in range(64):
        target = cases[i % len(cases)]
        m = int(rng.integers(3, 7))
        n = int(rng.integers(2, 7))
        inst, xbar = random_instance(m, n, target, 5000 + i)
        rep = full_report(inst, xbar)
        assert verify_report_invariants(rep) == []
        if target.startswith("Thm4.4"):
            assert rep.crcq.holds and rep.crcq.condition == target
            assert rep.mscq.holds
        else:
            assert not rep.crcq.holds and not rep.mscq.holds


def test_mscq_label_is_thm51_everywhere_it_holds():
    rng = np.random.default_rng(13)
    for i in range(16):
        inst, xbar = random_instance(
            int(rng.integers(2, 7)),
            int(rng.integers(1, 7)),
            ["Thm4.4(i)", "Thm4.4(ii)", "Thm4.4(v)", "Thm4.4(vi)"][i % 4],
            9000 + i,
        )
        v = check_mscq(inst, xbar)
        assert v.holds and v.condition == "Thm5.1"
        assert v.evidence["equivalent_route"].startswith("Thm4.4")
