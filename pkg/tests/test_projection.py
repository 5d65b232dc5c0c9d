"""Projection onto the feasible set across its three global shapes.

The oracle strategy: every projection must land on a feasible point, its
distance must equal the step length, and the variational inequality
<x - z, w - z> <= 0 must hold against independently checked feasible
points w.  Degenerate shapes additionally have closed-form answers that
are frozen here by hand.
"""

import numpy as np
import pytest

from socpcq import (
    AffineSOCInstance,
    DimensionError,
    FeasibleSetProjector,
    InfeasiblePointError,
    NumericalFailureError,
    margins,
    project_to_cone,
    project_to_feasible_set,
)

A_HALFPLANE = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
HALFPLANE = AffineSOCInstance(A_HALFPLANE, np.zeros(3))
# Feasible set: {x : x1 >= 0, x3 = 0}.

LINE = AffineSOCInstance(np.array([[1.0], [-1.0], [0.0]]), np.zeros(3))
# Feasible set: {x in R : x >= 0}.

IDENTITY = AffineSOCInstance(np.eye(3), np.zeros(3))
# Feasible set: the cone itself, so the cone projector is an exact oracle.


def feasible(instance, Z, slack=1e-9):
    scale = max(1.0, float(np.max(np.linalg.norm(Z, axis=1))))
    return bool(np.all(margins(Z @ instance.A.T + instance.b) >= -slack * scale))


def vi_gap(X, Z, pool):
    """max over x-rows and feasible w of <x - z, w - z>; <= 0 at the projection."""
    worst = -np.inf
    for x, z in zip(X, Z):
        worst = max(worst, float(np.max((pool - z) @ (x - z))))
    return worst


# -- degenerate shapes: frozen closed forms ---------------------------------


def test_halfplane_binding_and_nonbinding():
    proj = FeasibleSetProjector(HALFPLANE, np.zeros(3))
    z, d = proj.project(np.array([-1.0, 2.0, 3.0]))
    assert np.allclose(z, [0.0, 2.0, 0.0], atol=1e-12)
    assert d == pytest.approx(np.sqrt(10.0), abs=1e-12)

    z, d = proj.project(np.array([3.0, 5.0, 4.0]))  # half-space slack
    assert np.allclose(z, [3.0, 5.0, 0.0], atol=1e-12)
    assert d == pytest.approx(4.0, abs=1e-12)

    z, d = proj.project(np.array([2.0, -1.0, 0.0]))  # already feasible
    assert np.allclose(z, [2.0, -1.0, 0.0], atol=1e-12)
    assert d == pytest.approx(0.0, abs=1e-12)


def test_halfplane_same_answer_from_boundary_reference():
    # The degenerate boundary reference (1, 0, 0) pins down the same set as
    # the vertex reference, through the vanishing-gradient branch.
    proj = FeasibleSetProjector(HALFPLANE, np.array([1.0, 0.0, 0.0]))
    z, d = proj.project(np.array([-1.0, 2.0, 3.0]))
    assert np.allclose(z, [0.0, 2.0, 0.0], atol=1e-12)
    assert d == pytest.approx(np.sqrt(10.0), abs=1e-12)


def test_line_image_halfline():
    proj = FeasibleSetProjector(LINE, np.zeros(1))
    Z, D = proj.project_batch(np.array([[-1.0], [2.0], [-3.5]]))
    assert np.allclose(Z[:, 0], [0.0, 2.0, 0.0], atol=1e-15)
    assert np.allclose(D, [1.0, 0.0, 3.5], atol=1e-15)


def test_rank_one_images_match_halfspace_formula():
    # Rank-one A with a boundary-direction image makes the feasible set the
    # half-space {x : <a, x> + beta >= 0}, whose projection is explicit.
    rng = np.random.default_rng(11)
    for trial in range(50):
        m = int(rng.integers(2, 7))
        n = int(rng.integers(1, 7))
        u = rng.standard_normal(m - 1)
        u /= np.linalg.norm(u)
        v = np.concatenate([[1.0], u]) / np.sqrt(2.0)  # unit boundary direction
        a = rng.standard_normal(n)
        a /= np.linalg.norm(a)
        beta = float(rng.standard_normal())
        inst = AffineSOCInstance(np.outer(v, a), beta * v)
        ref = (1.0 - beta) * a  # <a, ref> + beta = 1 > 0
        proj = FeasibleSetProjector(inst, ref)
        X = rng.standard_normal((20, n)) * 3.0
        Z, D = proj.project_batch(X)
        t = X @ a + beta
        expected = X - np.minimum(t, 0.0)[:, None] * a[None, :]
        assert np.max(np.linalg.norm(Z - expected, axis=1)) < 1e-7
        assert np.allclose(D, np.linalg.norm(X - expected, axis=1), atol=1e-7)


def test_flat_shape_single_point_and_subspace():
    # Image touches the cone only at the origin: the feasible set is a flat.
    point_only = AffineSOCInstance(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.zeros(3)
    )
    proj = FeasibleSetProjector(point_only, np.zeros(2))
    z, d = proj.project(np.array([3.0, -4.0]))
    assert np.allclose(z, [0.0, 0.0], atol=1e-12)
    assert d == pytest.approx(5.0, abs=1e-12)

    axis_only = AffineSOCInstance(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), np.zeros(3)
    )
    proj = FeasibleSetProjector(axis_only, np.zeros(2))
    z, d = proj.project(np.array([3.0, -4.0]))
    assert np.allclose(z, [0.0, -4.0], atol=1e-12)
    assert d == pytest.approx(3.0, abs=1e-12)


# -- Slater shape: certified splitting ---------------------------------------


def test_identity_instance_matches_cone_projector():
    proj = FeasibleSetProjector(IDENTITY, np.array([1.0, 0.0, 0.0]))
    z, d = proj.project(np.array([0.0, 3.0, 4.0]))
    assert np.allclose(z, [2.5, 1.5, 2.0], atol=1e-10)
    assert d == pytest.approx(2.5 * np.sqrt(2.0), abs=1e-10)

    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 3)) * 4.0
    Z, D = proj.project_batch(X)
    exact = np.array([project_to_cone(x) for x in X])
    # The certificate bounds the distance gap by delta; the point itself can
    # then deviate by at most sqrt(2 d delta) (feasible z, obtuse angle).
    delta = 1e-10 * np.maximum(1.0, np.linalg.norm(X, axis=1))
    point_bound = np.sqrt(2.0 * (D + delta) * delta) + 1e-9
    assert np.all(np.linalg.norm(Z - exact, axis=1) <= point_bound)
    assert np.max(np.abs(D - np.linalg.norm(X - exact, axis=1))) < 1e-9


def test_shifted_cone_matches_translated_projection():
    b = np.array([1.0, -0.5, 2.0])
    inst = AffineSOCInstance(np.eye(3), b)
    proj = FeasibleSetProjector(inst, np.array([5.0, 0.0, -2.0]))
    rng = np.random.default_rng(4)
    X = rng.standard_normal((40, 3)) * 5.0
    Z, D = proj.project_batch(X)
    exact = np.array([project_to_cone(x + b) - b for x in X])
    delta = 1e-10 * np.maximum(1.0, np.linalg.norm(X, axis=1))
    point_bound = np.sqrt(2.0 * (D + delta) * delta) + 1e-9
    assert np.all(np.linalg.norm(Z - exact, axis=1) <= point_bound)
    assert np.max(np.abs(D - np.linalg.norm(X - exact, axis=1))) < 1e-9


def test_slater_instances_satisfy_variational_inequality():
    rng = np.random.default_rng(20)
    for m, n in [(3, 2), (3, 3), (4, 3), (5, 4), (2, 2), (4, 6)]:
        A = rng.standard_normal((m, n))
        x0 = rng.standard_normal(n)
        u = rng.standard_normal(m - 1)
        y_int = np.concatenate([[np.linalg.norm(u) + 1.0], u])
        inst = AffineSOCInstance(A, y_int - A @ x0)
        proj = FeasibleSetProjector(inst, x0)
        assert proj.geometry.value == "slater"

        X = rng.standard_normal((40, n)) * 4.0
        Z, D = proj.project_batch(X)
        assert feasible(inst, Z)
        assert np.allclose(D, np.linalg.norm(X - Z, axis=1), atol=1e-12)

        # Independently checked feasible pool, including the projections.
        W, _ = proj.project_batch(rng.standard_normal((120, n)) * 6.0)
        pool = np.vstack([W, Z, x0[None, :]])
        assert feasible(inst, pool)
        assert vi_gap(X, Z, pool) <= 1e-6

        # No feasible point may beat a certified distance.
        for x, d in zip(X, D):
            assert np.min(np.linalg.norm(pool - x, axis=1)) >= d - 1e-8


def test_projection_is_idempotent_on_slater_shape():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((4, 3))
    x0 = np.zeros(3)
    u = rng.standard_normal(3)
    inst = AffineSOCInstance(A, np.concatenate([[np.linalg.norm(u) + 0.5], u]))
    proj = FeasibleSetProjector(inst, x0)
    Z, _ = proj.project_batch(rng.standard_normal((25, 3)) * 3.0)
    Z2, D2 = proj.project_batch(Z)
    assert np.max(np.linalg.norm(Z2 - Z, axis=1)) < 1e-8
    assert np.max(D2) < 1e-8


def test_project_batch_is_deterministic():
    rng = np.random.default_rng(15)
    A = rng.standard_normal((4, 3))
    u = rng.standard_normal(3)
    inst = AffineSOCInstance(A, np.concatenate([[np.linalg.norm(u) + 1.0], u]))
    proj = FeasibleSetProjector(inst, np.zeros(3))
    X = rng.standard_normal((30, 3)) * 4.0
    Z1, D1 = proj.project_batch(X)
    Z2, D2 = proj.project_batch(X)
    assert np.array_equal(Z1, Z2)
    assert np.array_equal(D1, D2)


# -- wrapper, reference handling, errors -------------------------------------


def test_wrapper_short_circuits_on_feasible_input():
    x = np.array([5.0, 3.0, 0.0])
    z, d = project_to_feasible_set(IDENTITY, x)
    assert np.array_equal(z, x)
    assert d == 0.0


def test_wrapper_finds_vertex_reference():
    z, d = project_to_feasible_set(HALFPLANE, np.array([-1.0, 2.0, 3.0]))
    assert np.allclose(z, [0.0, 2.0, 0.0], atol=1e-12)
    assert d == pytest.approx(np.sqrt(10.0), abs=1e-12)


def test_wrapper_finds_interior_reference_by_ascent():
    # A z = -b has no solution; the margin climb must locate the interior.
    inst = AffineSOCInstance(
        np.array([[1.0], [0.0], [0.0]]), np.array([0.0, 0.5, 0.0])
    )
    z, d = project_to_feasible_set(inst, np.array([-2.0]))
    assert z[0] == pytest.approx(0.5, abs=1e-9)
    assert d == pytest.approx(2.5, abs=1e-9)


def test_wrapper_raises_when_set_is_empty():
    empty = AffineSOCInstance(
        np.array([[0.0], [1.0], [0.0]]), np.array([-1.0, 0.0, 0.0])
    )
    with pytest.raises(NumericalFailureError):
        project_to_feasible_set(empty, np.array([0.0]))


def test_infeasible_reference_is_rejected():
    with pytest.raises(InfeasiblePointError):
        FeasibleSetProjector(IDENTITY, np.array([-1.0, 2.0, 3.0]))


def test_dimension_mismatch_is_rejected():
    proj = FeasibleSetProjector(IDENTITY, np.array([1.0, 0.0, 0.0]))
    with pytest.raises(DimensionError):
        proj.project_batch(np.zeros((4, 2)))
