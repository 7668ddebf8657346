import math

import numpy as np
import pytest
from scipy.spatial import cKDTree
from scipy.stats import qmc

from cornerwave import diffeo as D
from cornerwave import geometry as g
from cornerwave.errors import InvalidArgumentError

OVAL = {0: 1.0, 2: 0.1}


def _grid(n_r=40, n_t=97):
    r, t = np.meshgrid(np.linspace(0, 1, n_r), 2 * np.pi * np.arange(n_t) / n_t, indexing="ij")
    return r.ravel(), t.ravel()


def _disk_samples(n, seed=0):
    u = qmc.Sobol(2, seed=seed).random(n)
    return np.sqrt(u[:, 0]), 2 * np.pi * u[:, 1]


@pytest.fixture(scope="module")
def triangle_map(triangle):
    return D.arclength_map(g.round_polygon(triangle, 0.2))


@pytest.fixture(scope="module")
def square_support():
    return D.smoothed_square_support()


# ---------------------------------------------------------------------------
# Harmonic extension
# ---------------------------------------------------------------------------
def test_circle_map_extension():
    r, t = _grid()
    out = D.harmonic_extension(D.circle_map(), r, t)
    assert np.allclose(out, np.column_stack([r * np.cos(t), r * np.sin(t)]), rtol=0, atol=1e-15)


def test_origin_gives_mean_coefficient():
    m = D.FourierBoundaryMap.from_dict({-2: 0.1j, -1: 0.3, 0: 2 - 1j, 1: 1.0, 3: 0.05})
    assert np.allclose(D.harmonic_extension(m, 0.0, 1.234), [2.0, -1.0], rtol=0, atol=1e-15)


def test_ellipse_jacobian_is_constant():
    a, b = 2.0, 0.7
    m = D.ellipse_map(a, b)
    rng = np.random.default_rng(1)
    r, t = rng.uniform(0, 1, 10_000), rng.uniform(0, 2 * np.pi, 10_000)
    # the extension is the linear map (u, v) -> (a u, b v) of the disk
    assert np.allclose(D.jacobian(m, r, t), a * b, rtol=1e-14)
    pts = D.harmonic_extension(m, r, t)
    assert np.allclose(pts, np.column_stack([a * r * np.cos(t), b * r * np.sin(t)]), rtol=0, atol=1e-15)


def test_jacobian_matches_finite_differences(triangle_map):
    rng = np.random.default_rng(2)
    r, t = rng.uniform(0.1, 0.9, 30), rng.uniform(0, 2 * np.pi, 30)
    u, v = r * np.cos(t), r * np.sin(t)
    f = lambda uu, vv: D.harmonic_extension(triangle_map, np.hypot(uu, vv), np.arctan2(vv, uu))
    s = 1e-6
    du = (f(u + s, v) - f(u - s, v)) / (2 * s)
    dv = (f(u, v + s) - f(u, v - s)) / (2 * s)
    fd = du[:, 0] * dv[:, 1] - du[:, 1] * dv[:, 0]
    assert np.allclose(D.jacobian(triangle_map, r, t), fd, rtol=1e-7)


def test_radius_outside_unit_interval():
    for r in (-1e-12, 1.0 + 1e-12, np.nan):
        with pytest.raises(InvalidArgumentError):
            D.harmonic_extension(D.circle_map(), r, 0.0)
    with pytest.raises(InvalidArgumentError):
        D.gauss_map_extension(D.SupportFunction.constant(1.0), 2.0, 0.0)


def test_boundary_map_validation():
    with pytest.raises(InvalidArgumentError):
        D.FourierBoundaryMap(np.ones(4))
    with pytest.raises(InvalidArgumentError):
        D.FourierBoundaryMap([1.0, np.inf, 0.0])


# ---------------------------------------------------------------------------
# Smoothed polygons
# ---------------------------------------------------------------------------
def test_arclength_map_reproduces_boundary(triangle, triangle_map):
    curve = g.round_polygon(triangle, 0.2)
    t = np.random.default_rng(3).uniform(0, 2 * np.pi, 500)
    exact = D.arclength_points(curve, t)
    assert np.abs(triangle_map.boundary(t) - exact).max() < 1e-12
    assert np.abs(D.harmonic_extension(triangle_map, 1.0, t) - exact).max() < 1e-12


def test_arclength_map_coefficient_decay(triangle_map):
    c = np.abs(triangle_map.coeffs)
    n = triangle_map.order
    assert max(c[0], c[-1]) < 1e-12 * c.max()
    assert 10 < n < 5000


def test_arclength_points_are_equally_spaced(triangle):
    curve = g.round_polygon(triangle, 0.2)
    theta = np.random.default_rng(7).uniform(0, 2 * np.pi, 200)
    pts = D.arclength_points(curve, theta)
    for th, p in zip(theta, pts):
        idx, param = curve.locate(th * curve.total_length / (2 * np.pi))
        seg = curve.segments[idx]
        s = sum(x.length for x in curve.segments[:idx]) + seg.arclength_between(seg.param_range[0], param)
        assert abs(s - th * curve.total_length / (2 * np.pi)) < 1e-12
        assert np.abs(seg.evaluate(np.array([param]))[0][0] - p).max() < 1e-12


def test_smoothed_polygon_extension_is_orientation_preserving(triangle_map):
    r, t = _disk_samples(4096, seed=4)
    r = np.minimum(r, 0.999)
    assert np.all(D.jacobian(triangle_map, r, t) > 0)


# ---------------------------------------------------------------------------
# Support-function curves
# ---------------------------------------------------------------------------
def test_constant_support_is_circle():
    t = np.linspace(0, 2 * np.pi, 50)
    pts = D.gauss_map_curve(D.SupportFunction.constant(2.5), t)
    assert np.allclose(pts, 2.5 * np.column_stack([np.cos(t), np.sin(t)]), rtol=0, atol=1e-15)
    r, tt = _grid()
    ext = D.gauss_map_extension(D.SupportFunction.constant(1.0), r, tt)
    assert np.allclose(ext, np.column_stack([r * np.cos(tt), r * np.sin(tt)]), rtol=0, atol=1e-15)


def test_oval_curvature_radius():
    sf = D.SupportFunction.from_cosines(OVAL)
    t = np.linspace(0, 2 * np.pi, 200)
    assert np.allclose(sf.curvature_radius(t), 1 - 0.3 * np.cos(2 * t), rtol=0, atol=1e-15)
    sf.check_convex()


def test_normal_is_gauss_map():
    sf = D.SupportFunction.from_cosines(OVAL)
    t = np.linspace(0, 2 * np.pi, 100)
    s = 1e-6
    tangent = (D.gauss_map_curve(sf, t + s) - D.gauss_map_curve(sf, t - s)) / (2 * s)
    # G' = (g + g'')(-sin, cos), orthogonal to the normal (cos, sin)
    assert np.abs(tangent[:, 0] * np.cos(t) + tangent[:, 1] * np.sin(t)).max() < 1e-8
    expected = sf.curvature_radius(t)[:, None] * np.column_stack([-np.sin(t), np.cos(t)])
    assert np.allclose(tangent, expected, atol=1e-8)


def test_gauss_map_extension_boundary_consistency():
    sf = D.SupportFunction.from_cosines(OVAL)
    t = 2 * np.pi * np.arange(720) / 720
    assert np.abs(D.gauss_map_extension(sf, 1.0, t) - D.gauss_map_curve(sf, t)).max() < 1e-12


def test_gauss_map_extension_origin():
    # complex coefficients make the n = 0 term beta_-1 * 2 nontrivial
    beta = np.array([0.05 - 0.02j, 0.1 + 0.03j, 1.0, 0.1 - 0.03j, 0.05 + 0.02j])
    sf = D.SupportFunction(beta)
    z = 2 * beta[1]
    assert np.allclose(D.gauss_map_extension(sf, 0.0, 0.3), [z.real, z.imag], rtol=0, atol=1e-15)


def test_nonconvex_support_rejected():
    sf = D.SupportFunction.from_cosines({0: 1.0, 2: 0.4})  # g + g'' = 1 - 1.2 cos 2t
    with pytest.raises(InvalidArgumentError, match="convex"):
        D.gauss_map_curve(sf, 0.0)
    with pytest.raises(InvalidArgumentError):
        D.gauss_map_extension(sf, 0.5, 0.0)
    with pytest.raises(InvalidArgumentError):
        D.SupportFunction(np.array([1.0, 1.0, 2.0j]))


def test_ellipse_support():
    a, b = 1.5, 0.8
    sf = D.ellipse_support(a, b)
    t = np.linspace(0, 2 * np.pi, 300)
    pts = D.gauss_map_curve(sf, t)
    assert np.abs((pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2 - 1).max() < 1e-12


def test_smoothed_square_support(square_support):
    square_support.check_convex()
    t = np.linspace(0, 2 * np.pi, 400)
    pts = D.gauss_map_curve(square_support, t)
    # close to the square [-1/2, 1/2]^2 grown by the offset
    assert np.abs(pts).max() < 0.5 + 0.05 + 0.05
    assert np.abs(pts).max(axis=0).min() > 0.5
    assert min(np.abs(square_support.beta[0]), np.abs(square_support.beta[-1])) < 1e-12 * np.abs(
        square_support.beta).max()


def test_json_roundtrips(triangle_map, square_support):
    back = D.FourierBoundaryMap.from_json(triangle_map.to_json())
    assert np.array_equal(back.coeffs, triangle_map.coeffs)
    sf = D.SupportFunction.from_json(square_support.to_json())
    assert np.array_equal(sf.beta, square_support.beta)


def test_sample_csv():
    r, t = np.array([0.0, 0.5]), np.array([0.0, 1.0])
    text = D.sample_csv(D.harmonic_extension(D.circle_map(), r, t), r, t)
    lines = text.strip().splitlines()
    assert lines[0] == "r,theta,x,y"
    assert np.allclose(np.loadtxt(lines[1:], delimiter=","), [[0, 0, 0, 0], [0.5, 1, 0.5 * math.cos(1), 0.5 * math.sin(1)]])


# ---------------------------------------------------------------------------
# Properties of the extensions
# ---------------------------------------------------------------------------
def _maps(triangle_map, square_support):
    return {
        "triangle": triangle_map,
        "ellipse": D.ellipse_map(1.3, 0.6, (0.2, -0.1)),
        "oval": D.SupportFunction.from_cosines(OVAL).boundary_map(),
        "square": square_support.boundary_map(),
    }


def test_mean_value_property(triangle_map, square_support):
    t = 2 * np.pi * np.arange(4096) / 4096
    for name, m in _maps(triangle_map, square_support).items():
        mean = m.boundary(t).mean(axis=0)
        assert np.abs(D.harmonic_extension(m, 0.0, 0.0) - mean).max() < 1e-10, name


def _outside_convex(poly, pts):
    """Signed distance past the edge of a convex counterclockwise polygon, by wedge lookup about its centroid."""
    c = poly.mean(axis=0)
    ang = np.arctan2(*(poly - c).T[::-1])
    order = np.argsort(ang)
    poly, ang = poly[order], ang[order]
    i = np.searchsorted(ang, np.arctan2(*(pts - c).T[::-1])) % len(poly)
    a, b = poly[i - 1], poly[i]
    e = b - a
    cross = e[:, 0] * (pts - a)[:, 1] - e[:, 1] * (pts - a)[:, 0]
    return -cross / np.hypot(e[:, 0], e[:, 1])


def test_maximum_principle(triangle_map, square_support):
    r, t = _disk_samples(2**17, seed=5)
    for name, m in _maps(triangle_map, square_support).items():
        n = 8192
        boundary = m.boundary(2 * np.pi * np.arange(n) / n)
        # chords of the sampled boundary sit inside the curve by at most this sagitta
        sag = np.hypot(*np.diff(boundary, axis=0).T).max() ** 2
        pts = D.harmonic_extension(m, r, t)
        assert _outside_convex(boundary, pts).max() < sag, name
        c = boundary.mean(axis=0)
        assert _outside_convex(boundary, c + 1.001 * (boundary[::64] - c)).min() > sag, name


def test_sampled_injectivity(triangle_map, square_support):
    r, t = _disk_samples(2**14, seed=6)
    pre = np.column_stack([r * np.cos(t), r * np.sin(t)])
    for name, m in _maps(triangle_map, square_support).items():
        img = D.harmonic_extension(m, r, t)
        for i, j in cKDTree(img).query_pairs(1e-10):
            assert np.hypot(*(pre[i] - pre[j])) < 1e-8, name
        assert np.all(D.jacobian(m, np.minimum(r, 0.999), t) > 0), name
