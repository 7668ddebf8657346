import math

import numpy as np
import pytest
from numpy.polynomial import legendre as L

from cornerwave import geometry as g
from cornerwave import panels as P
from cornerwave.errors import DegenerateGeometryError, InvalidArgumentError

from conftest import TRIANGLE_K


@pytest.fixture(scope="module")
def rounded_square(square):
    return g.round_polygon(square, 0.1)


@pytest.fixture(scope="module")
def square_mesh(rounded_square):
    return P.discretize(rounded_square, 1e-10, math.inf)


def _corner(curve):
    return next(s for s in curve.segments if s.kind == "corner")


# ---------------------------------------------------------------------------
# Resolution estimate
# ---------------------------------------------------------------------------
def test_resolution_straight_segment(rounded_square):
    idx = next(i for i, s in enumerate(rounded_square.segments) if s.kind == "line")
    for t0, t1 in ((0.0, 1.0), (0.2, 0.3), (0.0, 1e-6)):
        assert P.resolution_estimate(rounded_square, (idx, t0, t1)) < 1e-14


def test_resolution_full_corner_zone_is_unresolved(square):
    curve = g.round_polygon(square, 0.0125, g.SmoothingKernel("polynomial", 8))
    idx = next(i for i, s in enumerate(curve.segments) if s.kind == "corner")
    t0, t1 = curve.segments[idx].param_range
    est = P.resolution_estimate(curve, (idx, t0, t1))
    # direct computation: top Legendre coefficients of the tangent on the 32-point rule
    x, w = L.leggauss(32)
    _, d1, _ = curve.segments[idx].evaluate(t0 + 0.5 * (t1 - t0) * (x + 1))
    proj = (2 * np.arange(32) + 1)[:, None] / 2 * L.legvander(x, 31).T * w
    coef = proj @ d1[:, 1]
    ref = np.abs(coef[16:]).max() / np.hypot(d1[:, 0], d1[:, 1]).mean()
    assert est > 1e-10
    assert est >= ref * (1 - 1e-12)


def test_resolution_small_arc():
    curve = g.circle_curve()
    assert P.resolution_estimate(curve, (0, 0.0, math.pi / 64)) < 1e-10
    # the whole circle on one panel is not resolved at the default tolerance
    assert P.resolution_estimate(curve, (0, 0.0, 2 * math.pi)) > P.DEFAULT_TOL


def test_resolution_rejects_empty_interval():
    with pytest.raises(InvalidArgumentError):
        P.resolution_estimate(g.circle_curve(), (0, 1.0, 1.0))


# ---------------------------------------------------------------------------
# Discretization
# ---------------------------------------------------------------------------
def test_circle_perimeter():
    mesh = P.discretize(g.circle_curve(), 1e-10, 10.0)
    assert abs(mesh.weights.sum() - 2 * math.pi) < 1e-10


def _check_invariants(mesh, tol):
    lengths = mesh.panel_lengths
    ratio = lengths / np.roll(lengths, 1)
    assert np.all(ratio <= 2 * (1 + 1e-12)) and np.all(ratio >= 0.5 / (1 + 1e-12))
    assert lengths.max() <= 2 * mesh.wavelength * (1 + 1e-12)
    assert max(p.tail for p in mesh.panels) < tol


@pytest.mark.parametrize("kernel", ["poly:8", "poly:4", "gauss"])
@pytest.mark.parametrize("tol", [1e-6, 1e-10, 1e-13])
def test_mesh_invariants(triangle, kernel, tol):
    curve = g.round_polygon(triangle, 0.1, g.SmoothingKernel.parse(kernel))
    mesh = P.discretize(curve, tol, 2 * math.pi / TRIANGLE_K.real)
    _check_invariants(mesh, tol)
    assert mesh.n_nodes == 16 * mesh.n_panels


def test_square_structure(square_mesh, rounded_square):
    by_kind = {"line": [], "corner": []}
    for p in square_mesh.panels:
        by_kind[p.segment.kind].append(p)
    # corner zones are refined: corner panels are shorter than edge panels
    assert max(p.length for p in by_kind["corner"]) < min(p.length for p in by_kind["line"])
    assert all(p.tail == 0.0 for p in by_kind["line"])
    assert max(p.tail for p in by_kind["corner"]) < 1e-10
    # straight portions take few panels each
    edges = {p.segment_index for p in by_kind["line"]}
    assert all(sum(p.segment_index == e for p in by_kind["line"]) <= 12 for e in edges)


def test_wavelength_halving(rounded_square):
    lam = 0.1
    m1 = P.discretize(rounded_square, 1e-10, lam)
    m2 = P.discretize(rounded_square, 1e-10, lam / 2)
    # the cap is 2 lambda; halving lambda halves the cap
    assert m1.panel_lengths.max() <= 2 * lam
    assert m2.panel_lengths.max() <= 2 * (lam / 2) == lam
    assert m2.n_nodes > m1.n_nodes
    _check_invariants(m2, 1e-10)


@pytest.mark.parametrize("tol", [1e-15, 1e-5])
def test_tol_range(rounded_square, tol):
    with pytest.raises(InvalidArgumentError):
        P.discretize(rounded_square, tol, 1.0)


def test_nonpositive_wavelength(rounded_square):
    with pytest.raises(InvalidArgumentError):
        P.discretize(rounded_square, 1e-10, 0.0)


def test_unresolvable_refinement_raises(rounded_square):
    with pytest.raises(DegenerateGeometryError):
        P.discretize(rounded_square, 1e-14, math.inf, min_interval=0.5)


# ---------------------------------------------------------------------------
# Panels
# ---------------------------------------------------------------------------
def test_weights_sum_to_arclength(square_mesh, rounded_square):
    for p in square_mesh.panels:
        assert abs(p.weights.sum() - p.segment.arclength_between(p.t0, p.t1)) < 1e-12
    assert abs(square_mesh.perimeter - rounded_square.total_length) < 1e-12


def test_nodes_are_legendre_images(square_mesh):
    x, _ = L.leggauss(16)
    for p in square_mesh.panels[::7]:
        pos, _, _ = p.segment.evaluate(p.t0 + 0.5 * (p.t1 - p.t0) * (x + 1))
        assert np.array_equal(pos, p.nodes)


def test_quadrature_exactness(square_mesh):
    rng = np.random.default_rng(5)
    for p in square_mesh.panels[::5]:
        ref_w = p.weights / p.speed
        for _ in range(3):
            c = rng.normal(size=32)
            s = L.leggauss(16)[0]
            assert abs(ref_w @ L.legval(s, c) - 2 * c[0]) < 1e-13 * np.abs(c).sum()


def test_normals_unit_and_outward(square_mesh, triangle):
    assert np.allclose(np.hypot(square_mesh.normals[:, 0], square_mesh.normals[:, 1]), 1.0, atol=1e-15)
    # divergence theorem: int x n_x ds = area > 0 for outward normals
    area = square_mesh.area()
    assert area > 0
    assert abs(area - 1.0) < 0.01
    # convex shape: every normal points away from the centroid
    assert np.all(np.einsum("ij,ij->i", square_mesh.nodes - 0.5, square_mesh.normals) > 0)
    ref = P.corner_reference_mesh(triangle, 1.0, levels=6)
    assert abs(ref.area() - triangle.area) < 1e-13


def test_interpolation_reproduces_curve(square_mesh):
    rng = np.random.default_rng(9)
    for p in square_mesh.panels:
        s = rng.uniform(-1, 1, 50)
        interp = P.lagrange_basis(s) @ p.nodes
        exact, _, _ = p.evaluate(s)
        assert np.abs(interp - exact).max() < 1e-10 * max(1.0, p.length)


def test_lagrange_basis_partition_of_unity():
    s = np.concatenate([np.linspace(-1, 1, 37), P.GL_NODES[:3]])
    B = P.lagrange_basis(s)
    assert np.allclose(B.sum(axis=1), 1.0, atol=1e-14)
    assert np.allclose(B[-3:], np.eye(16)[:3])


# ---------------------------------------------------------------------------
# Interior point
# ---------------------------------------------------------------------------
def test_interior_point_examples(square, square_mesh):
    assert np.allclose(P.interior_point(square_mesh), [0.5, 0.5], atol=1e-12)
    disc = P.discretize(g.circle_curve(), 1e-10, 10.0)
    assert np.abs(P.interior_point(disc)).max() < 1e-10
    tri = g.Polygon(np.array([[0, 0], [1, 0], [0, 1]], dtype=float))
    mesh = P.corner_reference_mesh(tri, 10.0, levels=8)
    assert np.allclose(P.interior_point(mesh), [1 / 3, 1 / 3], atol=1e-12)


def test_interior_point_fallback_for_nonstar_shape():
    # a thin C shape whose centroid lies in the gap
    c = g.Polygon(np.array([[0, 0], [3, 0], [3, 0.4], [0.4, 0.4], [0.4, 2.6], [3, 2.6], [3, 3], [0, 3]], dtype=float))
    mesh = P.corner_reference_mesh(c, 10.0, levels=4)
    centroid = c.centroid()
    assert not P._point_in_polygon(centroid, c.vertices)
    pt = P.interior_point(mesh)
    assert P._point_in_polygon(pt, c.vertices)


# ---------------------------------------------------------------------------
# Corner reference mesh
# ---------------------------------------------------------------------------
def test_corner_reference_mesh(triangle):
    lam = 2 * math.pi / TRIANGLE_K.real
    mesh = P.corner_reference_mesh(triangle, lam)
    assert mesh.l2_weighting_required
    assert np.all(mesh.weights > 0)
    assert abs(mesh.perimeter - triangle.perimeter) < 1e-12
    # graded to 1e-10 of each edge: 34 dyadic levels
    shortest = mesh.panel_lengths.min()
    assert shortest <= 1e-10 * triangle.edge_lengths.max()
    assert shortest > 1e-11 * triangle.edge_lengths.min()
    _check_invariants(mesh, 1.0)
    # same size class as the published reference mesh: about twice the finest smoothed mesh
    fine = P.discretize(g.round_polygon(triangle, 0.0125), 1e-10, lam)
    assert 1.5 <= mesh.n_nodes / fine.n_nodes <= 3.0


def test_corner_reference_levels(square):
    m4 = P.corner_reference_mesh(square, 10.0, levels=4)
    m8 = P.corner_reference_mesh(square, 10.0, levels=8)
    assert m8.n_panels > m4.n_panels
    assert abs(m4.panel_lengths.min() - 2.0**-4) < 1e-15
    with pytest.raises(InvalidArgumentError):
        P.corner_reference_mesh(square, 10.0, levels=0)


def test_mesh_csv(square_mesh):
    text = square_mesh.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "panel,x,y,nx,ny,weight"
    assert len(lines) == square_mesh.n_nodes + 1
    data = np.loadtxt(lines[1:], delimiter=",")
    assert np.array_equal(data[:, 1:3], square_mesh.nodes)
    assert np.array_equal(data[:, 5], square_mesh.weights)
    assert data[-1, 0] == square_mesh.n_panels - 1
