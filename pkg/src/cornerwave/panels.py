"""Adaptive 16-node Gauss-Legendre panel discretization of piecewise curves."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as L

from .errors import DegenerateGeometryError, InvalidArgumentError
from .geometry import LineSegment, polygon_curve

logger = logging.getLogger(__name__)

N_NODES = 16
N_OVERSAMPLE = 32
DEFAULT_TOL = 1e-10

GL_NODES, GL_WEIGHTS = L.leggauss(N_NODES)
_OS_NODES, _OS_WEIGHTS = L.leggauss(N_OVERSAMPLE)
# coefficient projection on the 32-point rule: c_j = (2j+1)/2 sum_i w_i P_j(x_i) f(x_i)
_OS_PROJ = (
    (2 * np.arange(N_OVERSAMPLE) + 1)[:, None] / 2.0 * L.legvander(_OS_NODES, N_OVERSAMPLE - 1).T * _OS_WEIGHTS
)
# barycentric weights of the Gauss-Legendre nodes
BARY_WEIGHTS = np.array(
    [1.0 / np.prod(GL_NODES[i] - np.delete(GL_NODES, i)) for i in range(N_NODES)]
)
BARY_WEIGHTS /= np.abs(BARY_WEIGHTS).max()


def lagrange_basis(s):
    """Values of the 16 Lagrange basis polynomials at points ``s`` (shape (m, 16))."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    diff = s[:, None] - GL_NODES[None, :]
    exact = diff == 0
    diff[exact] = 1.0
    tmp = BARY_WEIGHTS / diff
    out = tmp / tmp.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    if np.any(rows):
        out[rows] = exact[rows].astype(float)
    return out


@dataclass(frozen=True, eq=False)
class Panel:
    """One 16-node Gauss-Legendre panel on a curve segment.

    ``weights`` are arclength weights: ``sum(weights * f(nodes))`` integrates
    ``f`` over the panel with respect to arclength.
    """

    segment: object
    segment_index: int
    t0: float
    t1: float
    nodes: np.ndarray
    derivs: np.ndarray  # d(position)/ds for the reference variable s in [-1, 1]
    normals: np.ndarray
    weights: np.ndarray
    tail: float

    @property
    def length(self):
        return float(self.weights.sum())

    @property
    def speed(self):
        return np.hypot(self.derivs[:, 0], self.derivs[:, 1])

    def evaluate(self, s):
        """Position, first and second derivative w.r.t. the reference variable ``s``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        half = 0.5 * (self.t1 - self.t0)
        pos, d1, d2 = self.segment.evaluate(self.t0 + half * (s + 1))
        return pos, d1 * half, d2 * half * half

    def endpoints(self):
        pos, _, _ = self.evaluate(np.array([-1.0, 1.0]))
        return pos


def make_panel(segment, segment_index, t0, t1):
    half = 0.5 * (t1 - t0)
    pos, d1, _ = segment.evaluate(t0 + half * (GL_NODES + 1))
    d1 = d1 * half
    speed = np.hypot(d1[:, 0], d1[:, 1])
    normals = np.column_stack([d1[:, 1], -d1[:, 0]]) / speed[:, None]
    return Panel(
        segment=segment,
        segment_index=segment_index,
        t0=float(t0),
        t1=float(t1),
        nodes=pos,
        derivs=d1,
        normals=normals,
        weights=GL_WEIGHTS * speed,
        tail=resolution_estimate_segment(segment, t0, t1),
    )


def _relative_tail(values, scale):
    coef = _OS_PROJ @ values
    if scale <= 0:
        return 0.0
    return float(np.abs(coef[N_NODES:]).max() / scale)


def resolution_estimate_segment(segment, t0, t1):
    if isinstance(segment, LineSegment):
        return 0.0
    half = 0.5 * (t1 - t0)
    _, d1, _ = segment.evaluate(t0 + half * (_OS_NODES + 1))
    speed = np.hypot(d1[:, 0], d1[:, 1])
    scale = float(speed.mean())
    # tangent components instead of raw coordinates: no roundoff floor from the offset
    return max(
        _relative_tail(d1[:, 0], scale),
        _relative_tail(d1[:, 1], scale),
        _relative_tail(speed, scale),
    )


def resolution_estimate(curve, interval):
    """Unresolved Legendre content of a curve piece.

    Parameters
    ----------
    curve : PiecewiseCurve
    interval : tuple
        ``(segment_index, t0, t1)`` in the segment's own parameter.

    Returns
    -------
    float
        Largest magnitude among Legendre coefficients of degree 16..31 of the
        32-point oversampled expansion of x'(t), y'(t) and the arclength
        density, relative to the mean arclength density.
    """
    idx, t0, t1 = interval
    if not t1 > t0:
        raise InvalidArgumentError("interval must have t1 > t0")
    return resolution_estimate_segment(curve.segments[idx], t0, t1)


@dataclass(frozen=True, eq=False)
class BoundaryMesh:
    """Ordered panels of a closed curve plus flattened node arrays."""

    panels: tuple
    wavelength: float
    l2_weighting_required: bool = False

    def __post_init__(self):
        object.__setattr__(self, "panels", tuple(self.panels))
        object.__setattr__(self, "nodes", np.vstack([p.nodes for p in self.panels]))
        object.__setattr__(self, "normals", np.vstack([p.normals for p in self.panels]))
        object.__setattr__(self, "weights", np.concatenate([p.weights for p in self.panels]))
        object.__setattr__(self, "panel_lengths", np.array([p.length for p in self.panels]))
        for arr in (self.nodes, self.normals, self.weights, self.panel_lengths):
            arr.setflags(write=False)

    @property
    def n_nodes(self):
        return len(self.weights)

    @property
    def n_panels(self):
        return len(self.panels)

    def panel_slice(self, i):
        return slice(N_NODES * i, N_NODES * (i + 1))

    @property
    def perimeter(self):
        return float(self.weights.sum())

    def area(self):
        return float(self.weights @ (self.nodes[:, 0] * self.normals[:, 0]))

    def to_csv(self):
        rows = ["panel,x,y,nx,ny,weight"]
        for i, p in enumerate(self.panels):
            for x, n, w in zip(p.nodes, p.normals, p.weights):
                rows.append(f"{i},{x[0]:.17g},{x[1]:.17g},{n[0]:.17g},{n[1]:.17g},{w:.17g}")
        return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# Mesh construction
# ---------------------------------------------------------------------------
def _split(panel):
    mid = 0.5 * (panel.t0 + panel.t1)
    return [
        make_panel(panel.segment, panel.segment_index, panel.t0, mid),
        make_panel(panel.segment, panel.segment_index, mid, panel.t1),
    ]


def _resolve(segment, idx, t0, t1, tol, min_len):
    out = []
    stack = [(t0, t1)]
    while stack:
        a, b = stack.pop()
        p = make_panel(segment, idx, a, b)
        if p.tail < tol:
            out.append(p)
            continue
        if b - a < min_len:
            raise DegenerateGeometryError(
                f"segment {idx} unresolved on [{a:.17g}, {b:.17g}] (tail {p.tail:.2e} >= {tol:.1e})"
            )
        m = 0.5 * (a + b)
        stack.append((m, b))
        stack.append((a, m))
    return out


def balance_and_cap(panels, wavelength, max_rounds=200):
    """Split panels until neighbours differ by at most 2x and none exceeds ``2 * wavelength``."""
    panels = list(panels)
    cap = 2.0 * wavelength
    for _ in range(max_rounds):
        lengths = np.array([p.length for p in panels])
        n = len(panels)
        prev_len = np.roll(lengths, 1)
        next_len = np.roll(lengths, -1)
        split = (lengths > 2.0 * prev_len * (1 + 1e-12)) | (lengths > 2.0 * next_len * (1 + 1e-12))
        split |= lengths > cap * (1 + 1e-12)
        if not np.any(split):
            return panels
        new = []
        for i in range(n):
            new.extend(_split(panels[i]) if split[i] else [panels[i]])
        panels = new
    raise DegenerateGeometryError("panel balancing did not reach a fixed point")


def discretize(curve, tol=DEFAULT_TOL, wavelength=math.inf, min_interval=1e-13):
    """Adaptive panel mesh of a closed piecewise curve.

    Segments are bisected until :func:`resolution_estimate` falls below
    ``tol``; panels are then split until neighbouring arclengths differ by
    at most a factor of two (cyclically) and no panel exceeds twice the
    wavelength.
    """
    if not (1e-14 <= tol <= 1e-6):
        raise InvalidArgumentError("tol must lie in [1e-14, 1e-6]")
    if not wavelength > 0:
        raise InvalidArgumentError("wavelength must be positive")
    panels = []
    for idx, seg in enumerate(curve.segments):
        t0, t1 = seg.param_range
        panels.extend(_resolve(seg, idx, t0, t1, tol, min_interval * max(1.0, abs(t1 - t0))))
    panels = balance_and_cap(panels, wavelength)
    logger.debug("discretized curve into %d panels", len(panels))
    return BoundaryMesh(tuple(panels), wavelength)


def corner_reference_mesh(polygon, wavelength, depth_scale=1e-10, levels=None):
    """Dyadically graded panels on the exact polygon.

    Each edge is split at ``L 2^-j`` from both ends, ``j = 1..J``, where
    ``L 2^-J <= depth_scale * L`` (or ``J = levels`` when given).  The
    resulting mesh must be solved with L2 weighting.
    """
    if levels is None:
        levels = int(math.ceil(math.log2(1.0 / depth_scale)))
    if levels < 1:
        raise InvalidArgumentError("need at least one dyadic level")
    curve = polygon_curve(polygon)
    panels = []
    fr = 0.5 ** np.arange(levels, 0, -1)  # 2^-J ... 1/2
    breaks = np.concatenate([[0.0], fr, 1.0 - fr[::-1][1:], [1.0]])
    for idx, seg in enumerate(curve.segments):
        for a, b in zip(breaks[:-1], breaks[1:]):
            panels.append(make_panel(seg, idx, float(a), float(b)))
    panels = balance_and_cap(panels, wavelength)
    return BoundaryMesh(tuple(panels), wavelength, l2_weighting_required=True)


def _point_in_polygon(pt, poly):
    x, y = pt
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def interior_point(mesh):
    """Area centroid of the enclosed region, or a deep interior point if the centroid is outside."""
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    nx, ny = mesh.normals[:, 0], mesh.normals[:, 1]
    w = mesh.weights
    area = w @ (x * nx)
    c = np.array([w @ (x * x * nx), w @ (y * y * ny)]) / (2 * area)
    if _point_in_polygon(c, mesh.nodes):
        return c
    # horizontal ray through the centroid height; midpoint of the widest chord
    best, best_len = None, -1.0
    for yy in np.linspace(y.min(), y.max(), 41)[1:-1]:
        xs = []
        nodes = mesh.nodes
        for i in range(len(nodes)):
            (x1, y1), (x2, y2) = nodes[i], nodes[(i + 1) % len(nodes)]
            if (y1 > yy) != (y2 > yy):
                xs.append(x1 + (yy - y1) * (x2 - x1) / (y2 - y1))
        xs.sort()
        for a, b in zip(xs[0::2], xs[1::2]):
            if b - a > best_len:
                best, best_len = np.array([0.5 * (a + b), yy]), b - a
    return best
