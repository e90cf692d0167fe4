"""Membership, volume, and construction invariants for the body types."""

import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

import geomprob as gp

MEMBERSHIP_N = 4000
VOL_REL_TOL = 1e-12


def cloud(seed, d, n=MEMBERSHIP_N, scale=2.0):
    rng = np.random.default_rng(seed)
    return (rng.random((n, d)) * 2.0 - 1.0) * scale


# ---------------------------------------------------------------------------
# membership


def test_ball_membership_matches_norm():
    ball = gp.Ball(np.array([0.5, -0.25, 0.0]), 0.75)
    pts = cloud(1, 3)
    want = np.linalg.norm(pts - ball.center, axis=1) <= ball.radius + 1e-12
    assert np.array_equal(ball.contains_batch(pts), want)


def test_box_membership():
    box = gp.box_body([0.0, -1.0], [2.0, 1.0])
    pts = cloud(2, 2, scale=3.0)
    want = (pts[:, 0] >= -1e-12) & (pts[:, 0] <= 2 + 1e-12)
    want &= (pts[:, 1] >= -1 - 1e-12) & (pts[:, 1] <= 1 + 1e-12)
    assert np.array_equal(box.contains_batch(pts), want)


def test_simplex_contains_centroid_not_vertex_overshoot():
    sim = gp.regular_simplex(3, 1.0)
    verts = gp.regular_simplex_vertices(3, 1.0)
    assert gp.contains(sim, np.zeros(3))
    assert gp.contains(sim, verts[0])
    assert not gp.contains(sim, verts[0] * 1.01)


def test_half_ball_cone_membership_pieces():
    cone = gp.HalfBallCone(3, 0.5, 0.0)
    assert gp.contains(cone, [0.2, 0.3, 0.1])
    assert gp.contains(cone, cone.apex)
    assert gp.contains(cone, [-0.25, 0.2, 0.0])  # inside the cone piece
    assert not gp.contains(cone, [-0.25, 0.6, 0.0])  # outside the cone slope
    assert not gp.contains(cone, [-0.51, 0.0, 0.0])
    assert not gp.contains(cone, [0.0, 1.01, 0.0])
    truncated = gp.HalfBallCone(3, 0.5, 0.2)
    assert not gp.contains(truncated, [-0.35, 0.0, 0.0])
    assert gp.contains(truncated, [-0.25, 0.0, 0.0])


def test_cut_and_affine_membership_compose():
    base = gp.Ball(np.zeros(2), 1.0)
    cut = gp.intersect_halfspace(base, gp.Halfspace.through([1.0, 0.0], 0.0))
    pts = cloud(3, 2)
    want = (np.linalg.norm(pts, axis=1) <= 1 + 1e-12) & (pts[:, 0] >= -1e-12)
    assert np.array_equal(cut.contains_batch(pts), want)

    mat = np.array([[2.0, 0.5], [0.0, 1.0]])
    img = gp.affine_image(cut, mat, [1.0, -1.0])
    back = (pts - np.array([1.0, -1.0])) @ np.linalg.inv(mat).T
    assert np.array_equal(img.contains_batch(pts), cut.contains_batch(back))


# ---------------------------------------------------------------------------
# exact volumes


def test_exact_volumes_closed_forms():
    assert math.isclose(gp.exact_volume(gp.Ball(np.zeros(3), 2.0)), (4 * math.pi / 3) * 8, rel_tol=VOL_REL_TOL)
    assert math.isclose(gp.exact_volume(gp.unit_cube(4)), 1.0, rel_tol=VOL_REL_TOL)
    assert math.isclose(gp.exact_volume(gp.half_ball(4)), gp.kappa(4).to_float() / 2, rel_tol=VOL_REL_TOL)
    tri = gp.Polygon2D([[0, 0], [2, 0], [0, 1]])
    assert math.isclose(gp.exact_volume(tri), 1.0, rel_tol=VOL_REL_TOL)


def test_half_ball_cone_volume_formula():
    # half ball plus a cone of height eps over the flat disk, tip truncated at delta
    for d, eps, delta in [(2, 0.5, 0.0), (3, 0.1, 0.02), (4, 0.3, 0.1)]:
        cone = gp.HalfBallCone(d, eps, delta)
        kd = gp.kappa(d).to_float()
        kdm1 = gp.kappa(d - 1).to_float()
        want = kd / 2 + kdm1 * (eps / d) * (1.0 - (delta / eps) ** d)
        assert math.isclose(gp.exact_volume(cone), want, rel_tol=VOL_REL_TOL)
    assert math.isclose(
        gp.exact_volume(gp.HalfBallCone(2, 0.5, 0.0)), math.pi / 2 + 0.5, rel_tol=VOL_REL_TOL
    )


def test_half_ball_cone_volume_against_rejection():
    cone = gp.HalfBallCone(3, 0.1, 0.02)
    est = gp.volume_estimate(cone, 200000, 7)
    assert abs(est.mean - gp.exact_volume(cone)) <= 4 * est.stderr


def test_affine_image_volume_scales_by_det():
    mat = np.array([[1.0, 2.0], [0.0, 3.0]])
    img = gp.affine_image(gp.Ball(np.zeros(2), 1.0), mat, [5.0, 5.0])
    assert math.isclose(gp.exact_volume(img), 3.0 * math.pi, rel_tol=VOL_REL_TOL)


def test_cut_through_ball_center_has_half_volume():
    cut = gp.intersect_halfspace(gp.Ball(np.zeros(3), 1.5), gp.Halfspace.through([0.0, 1.0, 0.0], 0.0))
    assert math.isclose(gp.exact_volume(cut), gp.kappa(3).to_float() * 1.5**3 / 2, rel_tol=VOL_REL_TOL)


# ---------------------------------------------------------------------------
# bounding boxes


@pytest.mark.parametrize(
    "make",
    [
        lambda: gp.Ball(np.array([1.0, -2.0]), 0.5),
        lambda: gp.half_ball(3),
        lambda: gp.HalfBallCone(3, 0.25, 0.1),
        lambda: gp.Polygon2D([[0, 0], [3, 1], [1, 4]]),
        lambda: gp.affine_image(gp.unit_cube(2), np.array([[1.0, 1.0], [0.0, 1.0]]), [0.0, 0.0]),
        lambda: gp.intersect_halfspace(gp.Ball(np.zeros(3), 1.0), gp.Halfspace.through([1, 1, 1], 0.2)),
    ],
)
def test_bounding_box_contains_all_samples(make):
    body = make()
    box = gp.bounding_box(body)
    pts = gp.sample_body(gp.SampleStream(11, 0), body, 2000)
    assert np.all(pts >= box.lo - 1e-9)
    assert np.all(pts <= box.hi + 1e-9)


def test_intersect_halfspace_tightens_axis_cut():
    cube = gp.unit_cube(3)
    cut = gp.intersect_halfspace(cube, gp.Halfspace.through([1.0, 0.0, 0.0], 0.75))
    box = gp.bounding_box(cut)
    assert math.isclose(box.lo[0], 0.75, rel_tol=VOL_REL_TOL)
    assert math.isclose(box.volume(), 0.25, rel_tol=VOL_REL_TOL)


# ---------------------------------------------------------------------------
# polygons


def test_polygon_canonicalization_is_input_order_invariant():
    verts = [[0, 0], [2, 0], [2, 1], [0, 1]]
    a = gp.Polygon2D(verts)
    b = gp.Polygon2D(verts[::-1])  # clockwise input
    c = gp.Polygon2D([[2, 1], [0, 0], [2, 0], [0, 1], [2, 0.5]])  # edge midpoint added
    for other in (b, c):
        assert a.vertices.shape == other.vertices.shape
        roll = np.argmin([np.linalg.norm(v - a.vertices[0]) for v in other.vertices])
        assert np.allclose(np.roll(other.vertices, -roll, axis=0), a.vertices, atol=1e-12)


def test_polygon_rejects_degenerate_input():
    with pytest.raises(gp.InvalidBodyError):
        gp.Polygon2D([[0, 0], [1, 1], [2, 2]])
    with pytest.raises(gp.InvalidBodyError):
        gp.Polygon2D([[0, 0], [1, 0]])


def test_polygon_membership_half_disk():
    poly = gp.half_disk_polygon(64)
    pts = cloud(5, 2, scale=1.2)
    inside = poly.contains_batch(pts)
    # every accepted point lies in the true half disk
    true_in = (np.linalg.norm(pts, axis=1) <= 1 + 1e-9) & (pts[:, 1] >= -1e-9)
    assert np.all(true_in[inside])
    area = gp.exact_volume(poly)
    assert area < math.pi / 2
    assert math.isclose(area, math.pi / 2, rel_tol=0.01)


# ---------------------------------------------------------------------------
# special constructors


def test_regular_simplex_vertices_geometry():
    for d in (2, 3, 4, 5):
        verts = gp.regular_simplex_vertices(d)
        assert np.allclose(np.linalg.norm(verts, axis=1), 1.0, atol=1e-12)
        assert np.allclose(verts.sum(axis=0), 0.0, atol=1e-12)
        gram = verts @ verts.T
        off = gram[~np.eye(d + 1, dtype=bool)]
        assert np.allclose(off, -1.0 / d, atol=1e-12)


def test_isotropic_simplex_covariance():
    sim = gp.isotropic_simplex(3)
    cov = gp.covariance_estimate(sim, 400000, 13)
    assert cov.max_deviation_from_identity() < 0.02
    assert np.allclose(cov.centroid, 0.0, atol=0.02)


def test_half_ball_moments_match_quadrature():
    for d in (2, 3, 4, 5):
        c, var1 = gp.half_ball_moments(d)
        dens = lambda t: (1.0 - t * t) ** ((d - 1) / 2.0)
        mass, _ = quad(dens, 0.0, 1.0)
        mean, _ = quad(lambda t: t * dens(t), 0.0, 1.0)
        second, _ = quad(lambda t: t * t * dens(t), 0.0, 1.0)
        assert math.isclose(c, mean / mass, rel_tol=1e-10)
        assert math.isclose(var1, second / mass - (mean / mass) ** 2, rel_tol=1e-10)
    c3, var3 = gp.half_ball_moments(3)
    assert math.isclose(c3, 3.0 / 8.0, rel_tol=1e-12)
    assert math.isclose(var3, 19.0 / 320.0, rel_tol=1e-12)


def test_isotropic_half_ball_covariance():
    body = gp.isotropic_half_ball(3)
    cov = gp.covariance_estimate(body, 400000, 17)
    assert cov.max_deviation_from_identity() < 0.02
    assert np.allclose(cov.centroid, 0.0, atol=0.02)


def test_simplex_with_hull_point_geometry():
    body, xa = gp.simplex_with_hull_point(1.2)
    verts = gp.regular_simplex_vertices(3, math.sqrt(15.0))
    # pushed point sits outside the base simplex but inside the new body
    base = gp.regular_simplex(3, math.sqrt(15.0))
    assert not gp.contains(base, xa)
    assert gp.contains(body, xa)
    for v in verts:
        assert gp.contains(body, v)
    # slightly beyond the pushed point is outside
    assert not gp.contains(body, xa * 1.01)
    with pytest.raises(gp.InvalidBodyError):
        gp.simplex_with_hull_point(1.0)
    with pytest.raises(gp.InvalidBodyError):
        gp.simplex_with_hull_point(2.0)


def test_make_counterexample_pair_is_nested():
    inner, outer = gp.make_counterexample_pair(3, 0.2, 0.05)
    pts = gp.sample_body(gp.SampleStream(19, 0), inner, 4000)
    assert outer.contains_batch(pts).all()
    assert gp.exact_volume(inner) < gp.exact_volume(outer)
    with pytest.raises(gp.InvalidBodyError):
        gp.make_counterexample_pair(3, 0.1, 0.1)


# ---------------------------------------------------------------------------
# validation and serialization


def test_halfspace_normalizes():
    h = gp.Halfspace.through([3.0, 4.0], 10.0)
    assert math.isclose(np.linalg.norm(h.normal), 1.0, rel_tol=1e-12)
    assert math.isclose(h.offset, 2.0, rel_tol=1e-12)
    assert h.contains_batch(np.array([[2.0, 2.0]]))[0]


def test_affine_image_rejects_singular_matrix():
    with pytest.raises(gp.SingularTransformError):
        gp.affine_image(gp.unit_cube(2), np.array([[1.0, 1.0], [1.0, 1.0]]), [0.0, 0.0])


def test_dimension_cap_enforced():
    with pytest.raises(gp.DimensionError):
        gp.Ball(np.zeros(9), 1.0)


@pytest.mark.parametrize(
    "make",
    [
        lambda: gp.Ball(np.array([0.5, -1.0]), 0.75),
        lambda: gp.unit_cube(3),
        lambda: gp.HalfBallCone(3, 0.25, 0.1),
        lambda: gp.Polygon2D([[0, 0], [3, 1], [1, 4]]),
        lambda: gp.intersect_halfspace(gp.Ball(np.zeros(2), 1.0), gp.Halfspace.through([1, 1], 0.1)),
        lambda: gp.affine_image(gp.half_ball(2), np.array([[2.0, 1.0], [0.0, 1.0]]), [1.0, 0.0]),
    ],
)
def test_json_round_trip_preserves_membership_and_volume(make):
    body = make()
    text = json.dumps(gp.body_to_json(body))
    back = gp.body_from_json(text)
    pts = cloud(23, body.dim, scale=3.0)
    assert np.array_equal(body.contains_batch(pts), back.contains_batch(pts))
    va, vb = gp.exact_volume(body), gp.exact_volume(back)
    assert (va is None and vb is None) or math.isclose(va, vb, rel_tol=1e-12)


def test_body_from_json_rejects_malformed():
    with pytest.raises(gp.InvalidBodyError):
        gp.body_from_json({"type": "nosuch"})
    with pytest.raises(gp.InvalidBodyError):
        gp.body_from_json({"type": "ball", "center": [0, 0]})
    with pytest.raises(gp.InvalidBodyError):
        gp.body_from_json({"type": "hpoly", "normals": [[1, 0]], "offsets": [0], "bound": [[0], [1]]})
    with pytest.raises(gp.InvalidBodyError):
        gp.body_from_json([1, 2, 3])


# ---------------------------------------------------------------------------
# spherical caps and slabs


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("t", [-0.3, 0.0, 0.45, 0.8])
def test_cap_volume_matches_quadrature(d, t):
    e1 = [1.0] + [0.0] * (d - 1)
    cap = gp.intersect_halfspace(gp.Ball(np.zeros(d), 1.0), gp.Halfspace.through(e1, t))
    section = gp.kappa(d - 1).to_float()
    want = quad(lambda u: section * (1.0 - u * u) ** ((d - 1) / 2.0), t, 1.0,
                epsabs=1e-13, epsrel=1e-13)[0]
    assert math.isclose(gp.exact_volume(cap), want, rel_tol=1e-10)


def test_slab_volume_from_two_parallel_cuts():
    ball = gp.Ball(np.zeros(3), 1.0)
    slab = gp.intersect_halfspace(
        gp.intersect_halfspace(ball, gp.Halfspace.through([1, 0, 0], 0.2)),
        gp.Halfspace.through([-1, 0, 0], -0.6),
    )
    # pi * integral of (1 - u^2) over [0.2, 0.6]
    want = math.pi * ((0.6 - 0.6**3 / 3.0) - (0.2 - 0.2**3 / 3.0))
    assert math.isclose(gp.exact_volume(slab), want, rel_tol=1e-12)


def test_cap_volume_off_center_ball():
    cap = gp.intersect_halfspace(
        gp.Ball(np.array([2.0, 0.0]), 0.5), gp.Halfspace.through([1, 0], 2.0)
    )
    assert math.isclose(gp.exact_volume(cap), math.pi * 0.25 / 2.0, rel_tol=1e-12)


def test_non_parallel_cuts_have_no_closed_volume():
    ball = gp.Ball(np.zeros(3), 1.0)
    wedge = gp.intersect_halfspace(
        gp.intersect_halfspace(ball, gp.Halfspace.through([1, 0, 0], 0.0)),
        gp.Halfspace.through([0, 1, 0], 0.0),
    )
    assert gp.exact_volume(wedge) is None


def test_cap_bounding_box_shrinks_transverse_axes():
    cap = gp.intersect_halfspace(
        gp.Ball(np.zeros(4), 1.0), gp.Halfspace.through([1, 0, 0, 0], 0.6)
    )
    box = gp.bounding_box(cap)
    width = math.sqrt(1.0 - 0.6**2)
    assert np.allclose(box.lo, [0.6, -width, -width, -width])
    assert np.allclose(box.hi, [1.0, width, width, width])
