import math

import numpy as np
import pytest

from cornerwave import geometry as g
from cornerwave import layerpot as lp
from cornerwave import panels as P
from cornerwave.errors import InvalidArgumentError, SingularityError

import oracles


@pytest.fixture(scope="module")
def circle_mesh():
    return P.discretize(g.circle_curve(), 1e-10, 2 * math.pi / 10)


@pytest.fixture(scope="module")
def square_curve(square):
    return g.round_polygon(square, 0.1)


@pytest.fixture(scope="module")
def square_mesh(square_curve):
    return P.discretize(square_curve, 1e-10, 2 * math.pi / 10)


def _random_pairs(n, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, (n, 2))
    y = rng.uniform(-2, 2, (n, 2))
    ang = rng.uniform(0, 2 * np.pi, n)
    return x, y, np.column_stack([np.cos(ang), np.sin(ang)])


# ---------------------------------------------------------------------------
# Point kernels
# ---------------------------------------------------------------------------
def test_wavenumber_validation():
    assert lp.Wavenumber(12.43 + 1e-5j).wavelength == pytest.approx(2 * math.pi / 12.43)
    for bad in (0.0, -1.0, 1 - 1e-3j, complex("nan")):
        with pytest.raises(InvalidArgumentError):
            lp.Wavenumber(bad)


def test_slp_symmetry():
    x, y, _ = _random_pairs(100)
    k = 7.77 + 1e-6j
    assert np.array_equal(lp.kernel_slp(x, y, k), lp.kernel_slp(y, x, k))


def test_slp_log_behaviour():
    k = 12.43 + 1e-5j
    r = 10.0 ** -np.arange(2, 9)
    rest = np.array([lp.kernel_slp([ri, 0.0], [0.0, 0.0], k) for ri in r]) + np.log(r) / (2 * np.pi)
    assert np.all(np.abs(rest) < 1.0)
    # the bounded part converges to (i/4) + (-1/2pi)(ln(k/2) + gamma)
    limit = 0.25j - (np.log(k / 2) + np.euler_gamma) / (2 * np.pi)
    assert abs(rest[-1] - limit) < 1e-10


def test_slp_value_at_k10():
    val = lp.kernel_slp([1.0, 0.0], [0.0, 0.0], 10.0)
    assert abs(val - 0.25j * oracles.hankel1_mp(0, 10 + 0j)) < 1e-15


def test_kernels_reject_coincident_points():
    for fn in (lambda: lp.kernel_slp([0, 0], [0, 0], 1.0),
               lambda: lp.kernel_dlp([0, 0], [0, 0], [1, 0], 1.0),
               lambda: lp.kernel_sprime([0, 0], [0, 0], [1, 0], 1.0),
               lambda: lp.kernel_laplace_dlp([0, 0], [0, 0], [1, 0])):
        with pytest.raises(SingularityError):
            fn()


def test_dlp_sprime_role_swap():
    x, y, n = _random_pairs(100, 1)
    k = 12.43 + 1e-5j
    assert np.array_equal(lp.kernel_dlp(x, y, n, k), lp.kernel_sprime(y, x, n, k))


@pytest.mark.parametrize("k", [1.0, 7.77 + 1e-6j, 30.0])
def test_normal_derivatives_by_finite_differences(k):
    x, y, n = _random_pairs(40, 2)
    keep = np.hypot(*(x - y).T) > 0.2
    x, y, n = x[keep], y[keep], n[keep]
    step = 1e-6
    fd_y = (lp.kernel_slp(x, y + step * n, k) - lp.kernel_slp(x, y - step * n, k)) / (2 * step)
    fd_x = (lp.kernel_slp(x + step * n, y, k) - lp.kernel_slp(x - step * n, y, k)) / (2 * step)
    dlp = lp.kernel_dlp(x, y, n, k)
    spr = lp.kernel_sprime(x, y, n, k)
    assert np.all(np.abs(fd_y - dlp) <= 1e-7 * np.maximum(1.0, np.abs(dlp)))
    assert np.all(np.abs(fd_x - spr) <= 1e-7 * np.maximum(1.0, np.abs(spr)))


def test_dlp_small_k_limit():
    x, y, n = _random_pairs(100, 3)
    got = lp.kernel_dlp(x, y, n, 1e-8)
    # d/dn_y of -(1/2pi) ln|x - y| is (1/2pi) <x - y, n_y> / |x - y|^2
    d = x - y
    ref = np.sum(d * n, axis=1) / (2 * np.pi * np.sum(d * d, axis=1))
    assert np.all(np.abs(got - ref) <= 1e-6 * np.abs(ref))
    assert np.allclose(lp.kernel_laplace_dlp(x, y, n), ref, rtol=1e-14, atol=0)


# ---------------------------------------------------------------------------
# Product quadrature
# ---------------------------------------------------------------------------
def _node_on(mesh, kind, which=0):
    idx = [i for i, p in enumerate(mesh.panels) if p.segment.kind == kind]
    return idx[which]


def test_product_weights_for_unit_kernel(square_mesh):
    ones = lambda r, dnx, dny: np.ones_like(r)  # noqa: E731
    for p in (_node_on(square_mesh, "corner"), _node_on(square_mesh, "line", 2)):
        for ell in (0, 7, 15):
            node = 16 * p + ell
            for q in (p, (p + 1) % square_mesh.n_panels, (p - 1) % square_mesh.n_panels):
                w = lp.panel_product_quadrature(square_mesh, node, q, ones)
                assert np.abs(w - square_mesh.weights[square_mesh.panel_slice(q)]).max() < 1e-12


def test_product_weights_for_polynomial_kernels(square_mesh):
    # smooth kernels in the target-source distance are integrated to 1e-12
    p = _node_on(square_mesh, "corner", 1)
    node = 16 * p + 4
    for q in (p, p + 1):
        sl = square_mesh.panel_slice(q)
        x0 = square_mesh.nodes[node]
        for deg in (1, 2, 5):
            kern = lambda r, dnx, dny: r ** (2 * deg)  # noqa: E731
            w = lp.panel_product_quadrature(square_mesh, node, q, kern)
            f = np.sum((square_mesh.nodes[sl] - x0) ** 2, axis=1) ** deg
            # the plain rule is exact enough for a polynomial in the panel parameter
            ref = square_mesh.weights[sl] @ f
            assert abs(w.sum() - ref) < 1e-12 * max(1.0, abs(ref))


def test_laplace_slp_on_straight_panel(square_mesh):
    logk = lambda r, dnx, dny: np.log(r)  # noqa: E731
    p = _node_on(square_mesh, "line", 1)
    panel = square_mesh.panels[p]
    L_len = panel.length
    for ell in (0, 3, 8, 15):
        node = 16 * p + ell
        w = lp.panel_product_quadrature(square_mesh, node, p, logk)
        t = 0.5 * (P.GL_NODES[ell] + 1) * L_len
        assert abs(w.sum() - oracles.log_integral_on_segment(L_len, t)) < 1e-13


@pytest.mark.parametrize("ell", [0, 5, 11, 15])
def test_self_slp_row_against_brute_force(square_mesh, ell):
    k = 12.43 + 1e-5j
    p = _node_on(square_mesh, "corner", 2)
    panel = square_mesh.panels[p]
    node = 16 * p + ell
    w = lp.panel_product_quadrature(square_mesh, node, p, "slp", k)
    t_node = panel.t0 + 0.5 * (panel.t1 - panel.t0) * (P.GL_NODES[ell] + 1)
    ref = oracles.slp_row_quad(panel.segment, panel.t0, panel.t1, square_mesh.nodes[node], k,
                               lambda t: 1.0, points=[t_node])
    assert abs(w.sum() - ref) < 1e-11


def test_neighbour_slp_row_against_brute_force(square_mesh):
    k = 12.43 + 1e-5j
    p = _node_on(square_mesh, "corner", 0)
    node = 16 * p + 15
    q = (p + 1) % square_mesh.n_panels
    panel = square_mesh.panels[q]
    w = lp.panel_product_quadrature(square_mesh, node, q, "slp", k)
    dens = lambda t: math.cos(3 * t)  # noqa: E731
    t_nodes = panel.t0 + 0.5 * (panel.t1 - panel.t0) * (P.GL_NODES + 1)
    ref = oracles.slp_row_quad(panel.segment, panel.t0, panel.t1, square_mesh.nodes[node], k, dens)
    assert abs(w @ np.cos(3 * t_nodes) - ref) < 1e-11


def test_product_quadrature_rejects_far_panels(square_mesh):
    node = 0
    far = square_mesh.n_panels // 2
    with pytest.raises(InvalidArgumentError):
        lp.panel_product_quadrature(square_mesh, node, far, "slp", 10.0)


def test_bernstein_radius():
    a, b = np.array([-1.0, 0.0]), np.array([1.0, 0.0])
    assert np.allclose(lp.bernstein_radius(np.array([[0.0, 0.0], [0.5, 0.0]]), a, b), 1.0)
    # the point (0, (rho - 1/rho)/2) lies on the ellipse of parameter rho
    rho = 3.5
    pt = np.array([[0.0, 0.5 * (rho - 1 / rho)]])
    assert abs(lp.bernstein_radius(pt, a, b)[0] - rho) < 1e-14


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("which", ["circle_mesh", "square_mesh"])
def test_laplace_dlp_constant_density(which, request):
    mesh = request.getfixturevalue(which)
    m = lp.assemble(mesh, "laplace-dlp")
    assert m.shape == (mesh.n_nodes, mesh.n_nodes)
    assert np.abs(m.matrix @ np.ones(mesh.n_nodes) + 0.5).max() < 1e-10


def test_gauss_identity_off_surface(circle_mesh):
    # interior targets see -1, exterior targets 0, by the same kernel and plain quadrature
    inner = np.array([[0.1, -0.2], [0.0, 0.3]])
    outer = np.array([[2.0, 1.0], [-3.0, 0.5]])
    for pts, val in ((inner, -1.0), (outer, 0.0)):
        k = lp.kernel_laplace_dlp(pts[:, None, :], circle_mesh.nodes[None, :, :], circle_mesh.normals[None, :, :])
        assert np.abs(k @ circle_mesh.weights - val).max() < 1e-12


def test_cfie_known_solution_on_circle(circle_mesh):
    k = 10.0
    x0 = np.array([0.2, -0.1])
    m = lp.assemble(circle_mesh, "dirichlet-cfie", k)
    rhs = lp.kernel_slp(circle_mesh.nodes, x0, k)
    sigma = np.linalg.solve(m.matrix, rhs)
    targets = oracles.ring_points(3.0, 40)
    eta = lp.coupling(k)
    y, n, w = circle_mesh.nodes[None], circle_mesh.normals[None], circle_mesh.weights
    kern = lp.kernel_slp(targets[:, None], y, k) + 1j * eta * lp.kernel_dlp(targets[:, None], y, n, k)
    u = kern @ (w * sigma)
    exact = lp.kernel_slp(targets, x0, k)
    assert np.abs(u - exact).max() / np.abs(exact).max() < 1e-9


def test_assemble_validation(circle_mesh, square_curve):
    with pytest.raises(InvalidArgumentError):
        lp.assemble(circle_mesh, "helmholtz-dlp", 10.0)
    with pytest.raises(InvalidArgumentError):
        lp.assemble(circle_mesh, "dirichlet-cfie")
    coarse = P.discretize(square_curve, 1e-10, 1.0)
    with pytest.raises(InvalidArgumentError):
        lp.assemble(coarse, "dirichlet-cfie", 10.0)


def test_diagonal_terms():
    eta = lp.coupling(10.0)
    assert eta == pytest.approx(12.8)
    assert lp.diagonal_term("dirichlet-cfie", eta) == 0.5j * eta
    assert lp.diagonal_term("neumann-single-layer", eta) == -0.5
    assert lp.diagonal_term("laplace-dlp", eta) == 0.0


def test_assembly_independent_of_jobs(square_mesh):
    a = lp.assemble(square_mesh, "neumann-single-layer", 10.0, jobs=1)
    b = lp.assemble(square_mesh, "neumann-single-layer", 10.0, jobs=3)
    assert np.array_equal(a.matrix, b.matrix)


# ---------------------------------------------------------------------------
# L2 weighting
# ---------------------------------------------------------------------------
def test_l2_round_trip(circle_mesh):
    k = 10.0
    m = lp.assemble(circle_mesh, "dirichlet-cfie", k)
    x, y = circle_mesh.nodes.T
    rhs = np.exp(1j * k * x) + 0.3 * y
    plain = np.linalg.solve(m.matrix, rhs)
    mw, bw = lp.l2_weight(m, rhs, circle_mesh.weights)
    assert mw.weighting == "l2-weighted"
    back = lp.unweight(np.linalg.solve(mw.matrix, bw), circle_mesh.weights)
    assert np.abs(back - plain).max() / np.abs(plain).max() < 1e-10


def test_l2_norm_matches_panel_quadrature(circle_mesh):
    # density of the smooth circle problem, interpolated on an oversampled rule
    k = 10.0
    m = lp.assemble(circle_mesh, "dirichlet-cfie", k)
    rhs = np.exp(1j * k * circle_mesh.nodes[:, 0])
    mw, bw = lp.l2_weight(m, rhs, circle_mesh.weights)
    st = np.linalg.solve(mw.matrix, bw)
    sigma = lp.unweight(st, circle_mesh.weights)
    xs, ws = np.polynomial.legendre.leggauss(40)
    basis = P.lagrange_basis(xs)
    total = 0.0
    for i, p in enumerate(circle_mesh.panels):
        vals = basis @ sigma[circle_mesh.panel_slice(i)]
        _, d1, _ = p.evaluate(xs)
        total += np.sum(ws * np.hypot(d1[:, 0], d1[:, 1]) * np.abs(vals) ** 2)
    assert abs(np.linalg.norm(st) - math.sqrt(total)) / math.sqrt(total) < 1e-8


def test_l2_unit_weights_leave_matrix_unchanged(circle_mesh):
    m = lp.assemble(circle_mesh, "laplace-dlp")
    rhs = np.arange(circle_mesh.n_nodes, dtype=float)
    mw, bw = lp.l2_weight(m, rhs, np.ones(circle_mesh.n_nodes))
    assert np.array_equal(mw.matrix, m.matrix) and np.array_equal(bw, rhs)
    with pytest.raises(InvalidArgumentError):
        lp.l2_weight(mw, rhs, np.ones(circle_mesh.n_nodes))


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_l2_rejects_nonpositive_weights(circle_mesh, bad):
    m = lp.assemble(circle_mesh, "laplace-dlp")
    w = circle_mesh.weights.copy()
    w[3] = bad
    with pytest.raises(InvalidArgumentError):
        lp.l2_weight(m, np.ones(circle_mesh.n_nodes), w)
    with pytest.raises(InvalidArgumentError):
        lp.unweight(np.ones(circle_mesh.n_nodes), w)


def test_matrix_dump(circle_mesh, tmp_path):
    m = lp.assemble(circle_mesh, "dirichlet-cfie", 10.0)
    path = tmp_path / "matrix.bin"
    m.dump(path)
    back = np.fromfile(path, dtype="<c16").reshape(m.shape)
    assert np.array_equal(back, m.matrix)
