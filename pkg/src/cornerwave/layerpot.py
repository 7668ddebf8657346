"""Helmholtz layer-potential kernels and Nystrom matrix assembly.

Kernels use the outgoing fundamental solution ``g_k(x, y) = (i/4) H0(k|x-y|)``.
Matrix rows are collocated at mesh nodes.  Far interactions use the plain
16-point panel rule. Near and self interactions use product integration:
the kernel times each Lagrange basis function is integrated on a mesh graded
geometrically toward the target.
"""

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError, SingularityError
from .panels import GL_NODES, GL_WEIGHTS, N_NODES, _OS_NODES, lagrange_basis
from .specfun import hankel01

logger = logging.getLogger(__name__)

FORMULATIONS = ("dirichlet-cfie", "neumann-single-layer", "laplace-dlp")
DEFAULT_ALPHA = 1.2
DEFAULT_BETA = 0.8

GRADING_RATIO = 0.25
SELF_DEPTH = 1e-14  # innermost interval, relative to the panel length
NEAR_RHO = 3.5  # Bernstein-ellipse parameter below which the plain rule is not trusted
ROW_CHUNK = 128


@dataclass(frozen=True)
class Wavenumber:
    """Complex wavenumber with ``Re k > 0`` and ``Im k >= 0``."""

    value: complex

    def __post_init__(self):
        k = complex(self.value)
        if not (k.real > 0 and k.imag >= 0 and math.isfinite(abs(k))):
            raise InvalidArgumentError(f"wavenumber needs Re k > 0 and Im k >= 0, got {k!r}")
        object.__setattr__(self, "value", k)

    @classmethod
    def coerce(cls, k):
        return k if isinstance(k, cls) else cls(k)

    @property
    def wavelength(self):
        return 2 * math.pi / self.value.real


# ---------------------------------------------------------------------------
# Point kernels
# ---------------------------------------------------------------------------
def _prep(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r == 0):
        raise SingularityError("kernel evaluated at coincident points x = y")
    return d, r


def _scalar(v):
    return complex(v) if np.ndim(v) == 0 else v


def kernel_slp(x, y, k):
    """Single-layer kernel ``(i/4) H0(k|x-y|)``; broadcasts over leading axes."""
    k = Wavenumber.coerce(k).value
    _, r = _prep(x, y)
    h0, _ = hankel01(k * r)
    return _scalar(0.25j * h0)


def kernel_dlp(x, y, n_y, k):
    """Double-layer kernel ``d g_k / d n_y = (ik/4) H1(kr) (x-y).n_y / r``."""
    k = Wavenumber.coerce(k).value
    d, r = _prep(x, y)
    _, h1 = hankel01(k * r)
    dn = np.sum(d * np.asarray(n_y, dtype=float), axis=-1)
    return _scalar(0.25j * k * h1 * dn / r)


def kernel_sprime(x, y, n_x, k):
    """Target normal derivative ``d g_k / d n_x = -(ik/4) H1(kr) (x-y).n_x / r``."""
    k = Wavenumber.coerce(k).value
    d, r = _prep(x, y)
    _, h1 = hankel01(k * r)
    dn = np.sum(d * np.asarray(n_x, dtype=float), axis=-1)
    return _scalar(-0.25j * k * h1 * dn / r)


def kernel_laplace_dlp(x, y, n_y):
    """Laplace double-layer kernel ``(1/2pi) (x-y).n_y / |x-y|^2``."""
    d, r = _prep(x, y)
    dn = np.sum(d * np.asarray(n_y, dtype=float), axis=-1)
    val = dn / (2 * np.pi * r * r)
    return float(val) if np.ndim(val) == 0 else val


def _combined(kind, k, eta, r, dnx, dny):
    """Kernel values from distances and normal projections of ``d = x - y``.

    ``kind`` is one of ``"cfie"`` (``S + i eta D``), ``"slp"``, ``"dlp"``,
    ``"sprime"``, ``"laplace-dlp"`` or a callable ``f(r, dnx, dny)``.
    """
    if callable(kind):
        return np.asarray(kind(r, dnx, dny), dtype=complex)
    if kind == "laplace-dlp":
        return (dny / (2 * np.pi * r * r)).astype(complex)
    h0, h1 = hankel01(k * r)
    if kind == "slp":
        return 0.25j * h0
    if kind == "dlp":
        return 0.25j * k * h1 * dny / r
    if kind == "sprime":
        return -0.25j * k * h1 * dnx / r
    if kind == "cfie":
        return 0.25j * h0 - 0.25 * eta * k * h1 * dny / r
    raise InvalidArgumentError(f"unknown kernel {kind!r}")


def formulation_kernel(formulation):
    """Kernel tag of the boundary operator and of the field representation."""
    return {
        "dirichlet-cfie": ("cfie", "cfie"),
        "neumann-single-layer": ("sprime", "slp"),
        "laplace-dlp": ("laplace-dlp", "laplace-dlp"),
    }[formulation]


def diagonal_term(formulation, eta):
    """Coefficient of the identity in the exterior boundary equation."""
    if formulation == "dirichlet-cfie":
        return 0.5j * eta
    if formulation == "neumann-single-layer":
        return -0.5
    return 0.0


def coupling(k, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA):
    """CFIE coupling ``eta = k alpha + beta``."""
    return k * alpha + beta


# ---------------------------------------------------------------------------
# Product integration on one panel
# ---------------------------------------------------------------------------
@functools.lru_cache(maxsize=4096)
def _graded_rule(s_star, stop):
    """Composite 16-point rule on [-1, 1] graded toward ``s_star``.

    ``stop`` is the innermost interval length in ``s`` units.  Returns the
    nodes, weights and exact offsets ``s - s_star``.
    """
    pts, wts = [], []
    for sign, length in ((-1.0, s_star + 1.0), (1.0, 1.0 - s_star)):
        if length <= 0:
            continue
        edges = [length]
        while edges[-1] > stop:
            edges.append(edges[-1] * GRADING_RATIO)
        edges.append(0.0)
        for outer, inner in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (outer + inner)
            half = 0.5 * (outer - inner)
            pts.append(sign * (mid + half * GL_NODES))
            wts.append(half * GL_WEIGHTS)
    off = np.concatenate(pts)
    s = np.clip(s_star + off, -1.0, 1.0)
    out = (s, np.concatenate(wts), off, lagrange_basis(s))
    for arr in out:
        arr.setflags(write=False)
    return out


def _closest_parameter(panel, x):
    """Reference parameter in [-1, 1] of the panel point closest to ``x``."""
    cand = np.concatenate([[-1.0, 1.0], _OS_NODES])
    pos, _, _ = panel.evaluate(cand)
    dist = np.hypot(*(pos - x).T)
    s = float(cand[np.argmin(dist)])
    for _ in range(8):
        p, d1, d2 = panel.evaluate(np.array([s]))
        diff = p[0] - x
        g = diff @ d1[0]
        hss = d1[0] @ d1[0] + diff @ d2[0]
        if hss <= 0:
            break
        s_new = min(max(s - g / hss, -1.0), 1.0)
        if abs(s_new - s) < 1e-15:
            s = s_new
            break
        s = s_new
    p, _, _ = panel.evaluate(np.array([s]))
    return s, float(np.hypot(*(p[0] - x)))


@dataclass(frozen=True)
class Target:
    """A collocation point; ``segment``/``t`` locate it on the curve when on-surface."""

    point: np.ndarray
    normal: np.ndarray
    segment: object = None
    t: float = None
    panel: int = None
    node: int = None


def mesh_target(mesh, i):
    p = mesh.panels[i // N_NODES]
    ell = i % N_NODES
    t = p.t0 + 0.5 * (p.t1 - p.t0) * (GL_NODES[ell] + 1)
    return Target(mesh.nodes[i], mesh.normals[i], p.segment, t, i // N_NODES, ell)


def product_weights(panel, target, kind, k=None, eta=0.0):
    """16 product-integration weights of ``kind`` for ``target`` on ``panel``."""
    length = panel.length
    on_panel = target.segment is panel.segment and target.t is not None and panel.t0 <= target.t <= panel.t1
    if on_panel:
        s_star, dist = 2 * (target.t - panel.t0) / (panel.t1 - panel.t0) - 1, 0.0
    else:
        s_star, dist = _closest_parameter(panel, target.point)
    stop = max(dist, SELF_DEPTH * length) / (0.5 * length)
    s, w, off, basis = _graded_rule(float(s_star), float(stop))
    half = 0.5 * (panel.t1 - panel.t0)
    t = panel.t0 + half * (s + 1)
    if target.segment is panel.segment and target.t is not None:
        d, gap_a, gap_b = panel.segment.chord(target.t, t, -half * off if on_panel else None)
        _, d1, _ = panel.segment.evaluate(t)
        speed_t = np.hypot(d1[:, 0], d1[:, 1])
        _, da, _ = panel.segment.evaluate(np.array([target.t]))
        dnx = gap_a / math.hypot(*da[0])
        dny = gap_b / speed_t
    else:
        pos, d1, _ = panel.segment.evaluate(t)
        speed_t = np.hypot(d1[:, 0], d1[:, 1])
        d = target.point - pos
        dnx = d @ target.normal
        dny = (d[:, 0] * d1[:, 1] - d[:, 1] * d1[:, 0]) / speed_t
    r = np.hypot(d[:, 0], d[:, 1])
    if np.any(r == 0):
        raise SingularityError("quadrature point coincides with the target")
    kval = _combined(kind, k, eta, r, dnx, dny)
    return (kval * w * speed_t * half) @ basis


def bernstein_radius(points, a, b):
    """Bernstein-ellipse parameter of ``points`` relative to the chord ``[a, b]``.

    The plain 16-point rule on a smooth panel loses accuracy roughly like
    ``rho^-32``; the chord approximation is adequate for resolved panels.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    scale = half @ half
    rel = np.asarray(points, dtype=float) - 0.5 * (a + b)
    z = (rel @ half + 1j * (rel @ np.array([-half[1], half[0]]))) / scale
    root = np.sqrt(z - 1) * np.sqrt(z + 1)
    return np.maximum(np.abs(z + root), np.abs(z - root))


def near_panels(mesh, rho=NEAR_RHO):
    """For every node, the panels that need product integration.

    A panel is near a node if it is the node's own panel, shares an endpoint
    with it, or the node lies inside the panel's Bernstein ellipse of
    parameter ``rho``.
    """
    n_p = mesh.n_panels
    near = [set() for _ in range(mesh.n_nodes)]
    own = np.arange(mesh.n_nodes) // N_NODES
    for i in range(mesh.n_nodes):
        p = own[i]
        near[i].update({p, (p - 1) % n_p, (p + 1) % n_p})
    tree = cKDTree(mesh.nodes)
    for p, panel in enumerate(mesh.panels):
        a, b = panel.endpoints()
        centre = 0.5 * (a + b)
        # semi-major axis of the ellipse, plus slack for panel curvature
        radius = 0.5 * (rho + 1 / rho) * 0.5 * np.hypot(*(b - a)) + mesh.panel_lengths[p]
        cand = np.asarray(tree.query_ball_point(centre, radius), dtype=int)
        if len(cand) == 0:
            continue
        hit = cand[bernstein_radius(mesh.nodes[cand], a, b) < rho]
        for i in hit:
            near[i].add(p)
    return [sorted(s) for s in near]


def panel_product_quadrature(mesh, node, panel_index, kernel, k=None, eta=0.0):
    """Product-integration weights of ``kernel`` for mesh node ``node`` on panel ``panel_index``.

    Parameters
    ----------
    mesh : BoundaryMesh
    node : int
        Target node index.
    panel_index : int
        Source panel index.
    kernel : str or callable
        ``"slp"``, ``"dlp"``, ``"sprime"``, ``"cfie"``, ``"laplace-dlp"`` or
        ``f(r, dnx, dny)`` where ``dnx``/``dny`` are ``(x - y)`` projected on
        the target/source unit normals.
    k : complex, optional
        Wavenumber for Helmholtz kernels.

    Raises
    ------
    InvalidArgumentError
        If the panel is not near the node; the plain rule applies there.
    """
    if panel_index not in _near_for_node(mesh, node):
        raise InvalidArgumentError(
            f"panel {panel_index} is not near node {node}; use the plain 16-point rule"
        )
    kv = None if k is None else Wavenumber.coerce(k).value
    return product_weights(mesh.panels[panel_index], mesh_target(mesh, node), kernel, kv, eta)


def _near_for_node(mesh, node):
    p = node // N_NODES
    n_p = mesh.n_panels
    out = {p, (p - 1) % n_p, (p + 1) % n_p}
    x = mesh.nodes[node][None, :]
    for q, panel in enumerate(mesh.panels):
        a, b = panel.endpoints()
        if bernstein_radius(x, a, b)[0] < NEAR_RHO:
            out.add(q)
    return out


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class NystromMatrix:
    """Dense Nystrom matrix with its formulation and weighting tags."""

    matrix: np.ndarray
    formulation: str
    weighting: str = "plain"
    k: complex = None
    eta: complex = 0.0
    mesh: object = field(default=None, repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    def dump(self, path):
        """Write the matrix as row-major little-endian complex128 (re, im) pairs.

        The format has no header and is meant for debugging only.
        """
        np.ascontiguousarray(self.matrix, dtype="<c16").tofile(path)


def _far_rows(mesh, rows, kind, k, eta):
    x = mesh.nodes[rows]
    d = x[:, None, :] - mesh.nodes[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    hit = r == 0
    r[hit] = 1.0
    dnx = np.einsum("ijc,ic->ij", d, mesh.normals[rows])
    dny = np.einsum("ijc,jc->ij", d, mesh.normals)
    vals = _combined(kind, k, eta, r, dnx, dny) * mesh.weights[None, :]
    vals[hit] = 0.0
    return vals


def _assemble_rows(mesh, rows, kind, k, eta, near):
    block = _far_rows(mesh, rows, kind, k, eta)
    for a, i in enumerate(rows):
        tgt = mesh_target(mesh, i)
        for p in near[i]:
            sl = mesh.panel_slice(p)
            block[a, sl] = product_weights(mesh.panels[p], tgt, kind, k, eta)
    return block


def assemble(mesh, formulation, k=None, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA, jobs=1):
    """Assemble the Nystrom matrix of an exterior boundary integral equation.

    Parameters
    ----------
    mesh : BoundaryMesh
    formulation : {"dirichlet-cfie", "neumann-single-layer", "laplace-dlp"}
        ``dirichlet-cfie``: ``(i eta / 2) I + S + i eta D`` with
        ``eta = k alpha + beta``.  ``neumann-single-layer``: ``-I/2 + S'``.
        ``laplace-dlp``: the principal-value Laplace double layer (no identity).
    k : complex
        Wavenumber; required except for ``laplace-dlp``.
    jobs : int
        Worker threads over row blocks.  Results do not depend on ``jobs``.

    Returns
    -------
    NystromMatrix
    """
    if formulation not in FORMULATIONS:
        raise InvalidArgumentError(f"formulation must be one of {FORMULATIONS}, got {formulation!r}")
    if formulation == "laplace-dlp":
        kv, eta = None, 0.0
    else:
        if k is None:
            raise InvalidArgumentError("a wavenumber is required for Helmholtz formulations")
        wk = Wavenumber.coerce(k)
        kv = wk.value
        if mesh.wavelength > wk.wavelength * (1 + 1e-9):
            raise InvalidArgumentError(
                f"mesh was capped for wavelength {mesh.wavelength:.6g} but k={kv} has wavelength "
                f"{wk.wavelength:.6g}; rediscretize"
            )
        eta = coupling(kv, alpha, beta) if formulation == "dirichlet-cfie" else 0.0
    kind, _ = formulation_kernel(formulation)
    n = mesh.n_nodes
    near = near_panels(mesh)
    chunks = [np.arange(a, min(a + ROW_CHUNK, n)) for a in range(0, n, ROW_CHUNK)]
    mat = np.empty((n, n), dtype=complex)

    def work(rows):
        mat[rows] = _assemble_rows(mesh, rows, kind, kv, eta, near)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, chunks))
    else:
        for rows in chunks:
            work(rows)
    mat[np.diag_indices(n)] += diagonal_term(formulation, eta)
    logger.debug("assembled %s matrix of size %d", formulation, n)
    return NystromMatrix(mat, formulation, "plain", kv, eta, mesh)


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise InvalidArgumentError(f"need {n} weights, got shape {w.shape}")
    if np.any(~(w > 0)):
        raise InvalidArgumentError("weights must be positive")
    return w


def l2_weight(m, rhs, weights):
    """Similarity transform ``A -> D^1/2 A D^-1/2``, ``b -> D^1/2 b`` with ``D = diag(weights)``."""
    if m.weighting != "plain":
        raise InvalidArgumentError("matrix is already weighted")
    n = m.matrix.shape[0]
    root = np.sqrt(_check_weights(weights, n))
    mat = m.matrix * root[:, None] / root[None, :]
    b = np.asarray(rhs) * root
    return NystromMatrix(mat, m.formulation, "l2-weighted", m.k, m.eta, m.mesh), b


def unweight(sigma_tilde, weights):
    """Recover ``sigma_j = sigma~_j / sqrt(h_j)``."""
    w = _check_weights(weights, len(sigma_tilde))
    return np.asarray(sigma_tilde) / np.sqrt(w)
