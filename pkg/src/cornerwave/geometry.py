"""Polygons, smoothing kernels and convolutional corner rounding.

A polygon corner is written, in a frame whose y-axis is the interior angle
bisector, as the even graph ``f(x) = a|x|`` with ``a = cot(theta/2)``
(``theta`` the interior angle).  Convolving that graph with a unit-mass even
kernel leaves it unchanged away from the vertex, so the smoothed corner can be
glued to the untouched straight edges.  Reflex corners have ``a < 0`` and the
rounded vertex moves into the exterior.

Lengths are dimensionless.  All public objects are immutable.
"""

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import InfeasibleToleranceError, InvalidArgumentError

SQRT2 = math.sqrt(2.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
DEFAULT_GAUSSIAN_EPS = 1e-15

_GL32_X, _GL32_W = np.polynomial.legendre.leggauss(32)
_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)
_TABLE_PIECES = 64  # parameter pieces in the cached arclength table of a segment


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


# ---------------------------------------------------------------------------
# Polygons
# ---------------------------------------------------------------------------
def _segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 != 0 and d3 * d4 != 0:
        return True

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    return (
        (d1 == 0 and on_seg(q1, q2, p1))
        or (d2 == 0 and on_seg(q1, q2, p2))
        or (d3 == 0 and on_seg(p1, p2, q1))
        or (d4 == 0 and on_seg(p1, p2, q2))
    )


def signed_area(vertices):
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class Polygon:
    """Closed simple polygon, stored counterclockwise.

    The closing edge from the last vertex back to the first is implicit.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidArgumentError("vertices must be an (n, 2) array")
        if len(v) > 3 and np.allclose(v[0], v[-1]):
            v = v[:-1]
        if len(v) < 3:
            raise InvalidArgumentError("a polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("vertices must be finite")
        edges = np.roll(v, -1, axis=0) - v
        if np.any(np.hypot(edges[:, 0], edges[:, 1]) == 0):
            raise InvalidArgumentError("consecutive vertices must be distinct")
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise InvalidArgumentError(f"edges {i} and {j} intersect")
        if signed_area(v) < 0:
            v = v[::-1].copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def edge_lengths(self):
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        return np.hypot(e[:, 0], e[:, 1])

    @property
    def area(self):
        return signed_area(self.vertices)

    @property
    def perimeter(self):
        return float(self.edge_lengths.sum())

    def interior_angles(self):
        """Interior angle at each vertex, in (0, 2*pi)."""
        v = self.vertices
        prev = np.roll(v, 1, axis=0) - v
        nxt = np.roll(v, -1, axis=0) - v
        a_prev = np.arctan2(prev[:, 1], prev[:, 0])
        a_next = np.arctan2(nxt[:, 1], nxt[:, 0])
        # counterclockwise polygon: interior is swept from next edge to prev edge
        return np.mod(a_prev - a_next, 2 * np.pi)

    def centroid(self):
        """Area centroid."""
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = 0.5 * cross.sum()
        cx = ((x + xn) * cross).sum() / (6 * a)
        cy = ((y + yn) * cross).sum() / (6 * a)
        return np.array([cx, cy])

    def to_json(self):
        return json.dumps({"vertices": self.vertices.tolist()})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if "vertices" not in data:
            raise InvalidArgumentError('polygon JSON needs a "vertices" key')
        return cls(np.asarray(data["vertices"], dtype=float))

    @classmethod
    def regular(cls, n, radius=1.0, center=(0.0, 0.0), rotation=0.0):
        t = rotation + 2 * np.pi * np.arange(n) / n
        return cls(np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)]))


# ---------------------------------------------------------------------------
# Smoothing kernels
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SmoothingKernel:
    """Even unit-mass smoothing kernel.

    ``kind="polynomial"`` is ``c_k (1 - x^2)^k`` on [-1, 1];
    ``kind="gaussian"`` is the standard normal density, treated as
    supported where it exceeds ``eps``.
    """

    kind: str = "polynomial"
    order: int = 8
    eps: float = DEFAULT_GAUSSIAN_EPS

    def __post_init__(self):
        if self.kind not in ("polynomial", "gaussian"):
            raise InvalidArgumentError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial":
            if int(self.order) != self.order or self.order < 1:
                raise InvalidArgumentError("polynomial kernel order must be a positive integer")
        elif not (0 < self.eps <= 1e-6):
            raise InvalidArgumentError("gaussian truncation eps must lie in (0, 1e-6]")

    @classmethod
    def parse(cls, spec):
        """Parse ``"poly:8"``, ``"polynomial:4"`` or ``"gauss"`` / ``"gauss:1e-12"``."""
        name, _, arg = str(spec).partition(":")
        name = name.strip().lower()
        if name in ("poly", "polynomial"):
            return cls("polynomial", int(arg) if arg else 8)
        if name in ("gauss", "gaussian"):
            return cls("gaussian", eps=float(arg) if arg else DEFAULT_GAUSSIAN_EPS)
        raise InvalidArgumentError(f"cannot parse kernel spec {spec!r}")

    def label(self):
        return f"poly:{self.order}" if self.kind == "polynomial" else f"gauss:{self.eps:g}"

    @functools.cached_property
    def normalization(self):
        """``c_k = Gamma(k + 3/2) / (sqrt(pi) Gamma(k + 1))``; Gaussian returns 1/sqrt(2 pi)."""
        if self.kind == "gaussian":
            return 1.0 / math.sqrt(2 * math.pi)
        k = self.order
        return math.exp(specfun.log_gamma(k + 1.5) - specfun.log_gamma(k + 1.0)) / math.sqrt(math.pi)


def kernel_eval(kernel, x, h):
    """Scaled kernel ``phi_h(x) = phi(x / h) / h``."""
    if not h > 0:
        raise InvalidArgumentError(f"kernel width must be positive, got {h!r}")
    u = np.asarray(x, dtype=float) / h
    if kernel.kind == "polynomial":
        val = np.where(np.abs(u) < 1, kernel.normalization * np.clip(1 - u * u, 0, None) ** kernel.order, 0.0)
    else:
        val = np.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
    val = val / h
    return float(val) if np.ndim(val) == 0 else val


def kernel_fourier(kernel, xi):
    """Fourier transform with the ``exp(-2 pi i xi x)`` convention; equals 1 at 0."""
    xi = np.abs(np.asarray(xi, dtype=float))
    if kernel.kind == "gaussian":
        out = np.exp(-2 * np.pi**2 * xi**2)
        return float(out) if out.ndim == 0 else out

    k = kernel.order
    nu = k + 0.5
    x = 2 * np.pi * xi
    flat = np.atleast_1d(x).astype(float)
    out = np.empty_like(flat)
    small = flat < 1.0
    if np.any(small):
        # Gamma(nu+1) (x/2)^-nu J_nu(x) = 0F1(; nu+1; -x^2/4)
        q = -0.25 * flat[small] ** 2
        term = np.ones_like(q)
        acc = np.ones_like(q)
        for m in range(1, 30):
            term = term * q / (m * (m + nu))
            acc += term
        out[small] = acc
    big = ~small
    if np.any(big):
        xb = flat[big]
        log_pref = specfun.log_gamma(nu + 1.0) - nu * np.log(xb / 2)
        out[big] = np.exp(log_pref) * specfun.bessel_j_half(k, xb)
    out = out.reshape(np.shape(x))
    return float(out) if out.ndim == 0 else out


def fourier_asymptotic_envelope(order, xi):
    """Large-frequency envelope ``(e sqrt(pi) / k) (2k / (e |xi|))^(k+1)``."""
    k = order
    return math.e * math.sqrt(math.pi) / k * (2 * k / (math.e * np.abs(xi))) ** (k + 1)


# ---------------------------------------------------------------------------
# Convolved profiles of a|x| + b
# ---------------------------------------------------------------------------
def gaussian_corner_profile(a, b, h, x):
    """Closed-form convolution of ``a|x| + b`` with the Gaussian of width ``h``."""
    x = np.asarray(x, dtype=float)
    val = a * x * specfun.erf(x / (SQRT2 * h)) + b + SQRT_2_OVER_PI * a * h * np.exp(-0.5 * (x / h) ** 2)
    return float(val) if val.ndim == 0 else val


def _gaussian_profile_derivs(a, h, x):
    d1 = a * specfun.erf(x / (SQRT2 * h))
    d2 = 2 * a * np.exp(-0.5 * (x / h) ** 2) / (math.sqrt(2 * math.pi) * h)
    return d1, d2


def _gaussian_residual(a, delta, x):
    """``|gaussian_corner_profile(a, 0, delta, x) - a|x||``, cancellation free."""
    from scipy.special import erfcx

    u = abs(x) / delta
    r = math.exp(-0.5 * u * u) * (SQRT_2_OVER_PI - u * erfcx(u / SQRT2))
    return abs(a) * delta * max(r, 0.0)


def select_delta(w, a, eps=DEFAULT_GAUSSIAN_EPS):
    """Largest Gaussian width whose profile matches ``a|x|+b`` to ``eps`` at ``|x| = w/2``.

    Bisection in ``log(delta)`` to relative tolerance 1e-12.
    """
    if not w > 0:
        raise InvalidArgumentError("zone width w must be positive")
    if not (0 < eps <= 1e-6):
        raise InvalidArgumentError("eps must lie in (0, 1e-6]")
    if a == 0 or _gaussian_residual(a, w, w / 2) <= eps:
        return float(w)
    lo = w * 1e-6
    if _gaussian_residual(a, lo, w / 2) > eps:
        raise InfeasibleToleranceError(f"no Gaussian width in (0, {w}] reaches eps={eps:g}")
    hi = float(w)
    while hi / lo - 1 > 1e-12:
        mid = math.sqrt(lo * hi)
        if _gaussian_residual(a, mid, w / 2) <= eps:
            lo = mid
        else:
            hi = mid
    return lo


def _poly_primitive(order, u):
    """``I_k(u) = int_0^u (1 - t^2)^k dt`` for |u| <= 1 by a positive recurrence."""
    s = 1 - u * u
    val = u.copy()
    p = np.ones_like(u)
    for j in range(1, order + 1):
        p = p * s
        val = (u * p + 2 * j * val) / (2 * j + 1)
    return val


def polynomial_corner_profile(kernel, a, b, h, x):
    """Convolution of ``a|x| + b`` with the polynomial kernel of width ``h``.

    Returns ``(f, f', f'')`` evaluated at ``x``.  Exact: uses closed-form
    antiderivatives of ``c_k (1 - u^2)^k |x - u|``.
    """
    x = np.asarray(x, dtype=float)
    u = x / h
    inside = np.abs(u) < 1
    uc = np.clip(u, -1, 1)
    c = kernel.normalization
    k = kernel.order
    prim = c * _poly_primitive(k, np.abs(uc))  # M0(u) - 1/2 for u >= 0
    m1 = -c * (1 - uc * uc) ** (k + 1) / (2 * (k + 1))
    shape = np.abs(uc) * 2 * prim - 2 * m1  # u (2 M0(u) - 1) - 2 M1(u)
    f = np.where(inside, a * h * shape, a * np.abs(x)) + b
    d1 = np.where(inside, 2 * a * np.sign(u) * prim, a * np.sign(x))
    d2 = np.where(inside, (2 * a / h) * c * (1 - uc * uc) ** k, 0.0)
    return f, d1, d2


# ---------------------------------------------------------------------------
# Curve segments
# ---------------------------------------------------------------------------
def _gl_arclength(seg, t0, t1, tol=1e-14, depth=0):
    """Adaptive 32-point Gauss-Legendre integral of |c'(t)| over [t0, t1]."""
    mid = 0.5 * (t0 + t1)
    half = 0.5 * (t1 - t0)

    def rule(a, b):
        m, hw = 0.5 * (a + b), 0.5 * (b - a)
        _, d1, _ = seg.evaluate(m + hw * _GL32_X)
        return hw * float(_GL32_W @ np.hypot(d1[:, 0], d1[:, 1]))

    whole = rule(t0, t1)
    split = rule(t0, mid) + rule(mid, t1)
    if abs(whole - split) <= tol * max(1.0, abs(split)) or depth > 40 or half < 1e-15:
        return split
    return _gl_arclength(seg, t0, mid, tol, depth + 1) + _gl_arclength(seg, mid, t1, tol, depth + 1)


class _Segment:
    kind = "segment"

    @property
    def param_range(self):
        raise NotImplementedError

    def evaluate(self, t):
        raise NotImplementedError

    def arclength_between(self, t0, t1):
        return _gl_arclength(self, t0, t1)

    @functools.cached_property
    def _arclength_table(self):
        """Uniform parameter grid and the arclength at each grid node."""
        t0, t1 = self.param_range
        grid = np.linspace(t0, t1, _TABLE_PIECES + 1)
        pieces = [self.arclength_between(a, b) for a, b in zip(grid[:-1], grid[1:])]
        return grid, np.concatenate([[0.0], np.cumsum(pieces)])

    @functools.cached_property
    def length(self):
        return float(self._arclength_table[1][-1])

    def chord(self, ta, tb, dt=None):
        """Chord data between a point at ``ta`` and points at ``tb``.

        Returns ``(d, gap_a, gap_b)`` with ``d = c(ta) - c(tb)`` and
        ``gap_x = cross(d, c'(t_x))``.  Subclasses evaluate these without
        the cancellation of subtracting absolute positions, which matters
        for the normal-derivative kernels when ``tb`` is close to ``ta``.
        ``dt``, if given, is the exact value of ``ta - tb``.
        """
        tb = np.atleast_1d(np.asarray(tb, dtype=float))
        pa, da, _ = self.evaluate(np.array([float(ta)]))
        pb, db, _ = self.evaluate(tb)
        d = pa - pb
        return d, _cross(d, da), _cross(d, db)

    def params_at_arclengths(self, s):
        """Parameters at arclengths ``s`` from the segment start (vectorized Newton).

        Each ``s`` is bracketed by the cached arclength table and refined
        with a 32-point Gauss-Legendre arclength from the bracketing node.
        """
        grid, cum = self._arclength_table
        s = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), 0.0, cum[-1])
        j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(grid) - 2)
        a, b = grid[j], grid[j + 1]
        t = a + (b - a) * (s - cum[j]) / (cum[j + 1] - cum[j])
        for _ in range(12):
            hw = 0.5 * (t - a)
            nodes = a[:, None] + hw[:, None] * (_GL32_X + 1)
            _, d1, _ = self.evaluate(nodes.ravel())
            speed = np.hypot(d1[:, 0], d1[:, 1]).reshape(nodes.shape)
            resid = cum[j] + hw * (speed @ _GL32_W) - s
            _, dt, _ = self.evaluate(t)
            step = resid / np.hypot(dt[:, 0], dt[:, 1])
            t = np.clip(t - step, a, b)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(t))):
                break
        return t

    def param_at_arclength(self, s):
        """Parameter at arclength ``s`` from the segment start."""
        return float(self.params_at_arclengths(s)[0])


@dataclass(frozen=True)
class LineSegment(_Segment):
    start: np.ndarray
    end: np.ndarray
    kind: str = field(default="line", init=False)

    @property
    def param_range(self):
        return (0.0, 1.0)

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p0 = np.asarray(self.start, dtype=float)
        d = np.asarray(self.end, dtype=float) - p0
        pos = p0 + t[:, None] * d
        d1 = np.broadcast_to(d, pos.shape).copy()
        return pos, d1, np.zeros_like(pos)

    def arclength_between(self, t0, t1):
        d = np.asarray(self.end, dtype=float) - np.asarray(self.start, dtype=float)
        return float(np.hypot(*d)) * (t1 - t0)

    def chord(self, ta, tb, dt=None):
        tb = np.atleast_1d(np.asarray(tb, dtype=float))
        dt = float(ta) - tb if dt is None else np.asarray(dt, dtype=float)
        d = dt[:, None] * (np.asarray(self.end, dtype=float) - np.asarray(self.start, dtype=float))
        zero = np.zeros(len(tb))
        return d, zero, zero.copy()

    @property
    def length(self):
        return float(np.hypot(*(np.asarray(self.end, dtype=float) - np.asarray(self.start, dtype=float))))

    def params_at_arclengths(self, s):
        return np.atleast_1d(np.asarray(s, dtype=float)) / self.length

    def to_dict(self):
        return {"kind": "line", "start": list(map(float, self.start)), "end": list(map(float, self.end))}


@dataclass(frozen=True)
class ArcSegment(_Segment):
    center: np.ndarray
    radius: float
    theta0: float
    theta1: float
    kind: str = field(default="arc", init=False)

    @property
    def param_range(self):
        return (self.theta0, self.theta1)

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        c, s = np.cos(t), np.sin(t)
        r = self.radius
        pos = np.column_stack([self.center[0] + r * c, self.center[1] + r * s])
        d1 = np.column_stack([-r * s, r * c])
        d2 = np.column_stack([-r * c, -r * s])
        return pos, d1, d2

    def arclength_between(self, t0, t1):
        return self.radius * (t1 - t0)

    def chord(self, ta, tb, dt=None):
        tb = np.atleast_1d(np.asarray(tb, dtype=float))
        delta = float(ta) - tb if dt is None else np.asarray(dt, dtype=float)
        if abs(self.theta1 - self.theta0 - 2 * math.pi) < 1e-12:
            wrap = np.abs(delta) > math.pi
            delta = np.where(wrap, delta - np.sign(delta) * 2 * math.pi, delta)
        half = 0.5 * delta
        mid = float(ta) - half
        sh = np.sin(half)
        r = self.radius
        d = 2 * r * sh[:, None] * np.column_stack([-np.sin(mid), np.cos(mid)])
        g = 2 * r * r * sh * sh
        return d, g, -g

    @property
    def length(self):
        return self.radius * (self.theta1 - self.theta0)

    def params_at_arclengths(self, s):
        return self.theta0 + np.atleast_1d(np.asarray(s, dtype=float)) / self.radius

    def to_dict(self):
        return {
            "kind": "arc",
            "center": list(map(float, self.center)),
            "radius": float(self.radius),
            "theta0": float(self.theta0),
            "theta1": float(self.theta1),
        }


@dataclass(frozen=True)
class CornerProfile:
    """Convolved corner graph placed in the plane.

    Graph coordinate ``x`` runs along ``tangent_axis``; the graph value is
    measured along ``normal_axis`` (the interior bisector).  ``half_width`` is
    the graph extent replaced by the rounding, ``width`` the kernel width in
    graph units (``h`` for the polynomial kernel, Gaussian standard deviation
    ``delta`` otherwise).
    """

    slope: float
    offset: float
    half_width: float
    width: float
    kernel: SmoothingKernel
    vertex: np.ndarray
    tangent_axis: np.ndarray
    normal_axis: np.ndarray

    def graph(self, x):
        x = np.asarray(x, dtype=float)
        if self.kernel.kind == "polynomial":
            return polynomial_corner_profile(self.kernel, self.slope, self.offset, self.width, x)
        f = gaussian_corner_profile(self.slope, self.offset, self.width, x)
        d1, d2 = _gaussian_profile_derivs(self.slope, self.width, x)
        return np.asarray(f), d1, d2

    def to_dict(self):
        return {
            "slope": float(self.slope),
            "offset": float(self.offset),
            "half_width": float(self.half_width),
            "width": float(self.width),
            "kernel": self.kernel.label(),
            "vertex": list(map(float, self.vertex)),
            "tangent_axis": list(map(float, self.tangent_axis)),
            "normal_axis": list(map(float, self.normal_axis)),
        }


@dataclass(frozen=True)
class RoundedCorner(_Segment):
    profile: CornerProfile
    kind: str = field(default="corner", init=False)

    @property
    def param_range(self):
        return (-self.profile.half_width, self.profile.half_width)

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = self.profile
        f, d1, d2 = p.graph(t)
        e1, e2 = np.asarray(p.tangent_axis), np.asarray(p.normal_axis)
        pos = np.asarray(p.vertex) + t[:, None] * e1 + f[:, None] * e2
        der = e1 + d1[:, None] * e2
        sec = d2[:, None] * e2
        return pos, der, sec

    def chord(self, ta, tb, dt=None):
        # graph frame: d = dt e1 + df e2 and cross(e1, e2) = 1, so
        # gap_b = dt f'(tb) - df = -int_tb^ta (ta - u) f''(u) du
        # gap_a = dt f'(ta) - df =  int_tb^ta (u - tb) f''(u) du
        tb = np.atleast_1d(np.asarray(tb, dtype=float))
        ta = float(ta)
        p = self.profile
        e1, e2 = np.asarray(p.tangent_axis), np.asarray(p.normal_axis)
        fa, fpa, _ = p.graph(np.array([ta]))
        fb, fpb, _ = p.graph(tb)
        dt = ta - tb if dt is None else np.asarray(dt, dtype=float)
        df = fa[0] - fb
        gap_a = dt * fpa[0] - df
        gap_b = dt * fpb - df
        close = np.abs(dt) < 0.1 * p.width
        if np.any(close):
            dtc = dt[close]
            u = ta - 0.5 * dtc[:, None] * (1 - _GL16_X)
            _, _, f2 = p.graph(u.ravel())
            f2 = f2.reshape(u.shape)
            rb = 0.5 * dtc * ((ta - u) * f2 @ _GL16_W)
            f1 = 0.5 * dtc * (f2 @ _GL16_W)
            df[close] = fpb[close] * dtc + rb
            gap_b[close] = -rb
            gap_a[close] = dtc * f1 - rb
        d = dt[:, None] * e1 + df[:, None] * e2
        return d, gap_a, gap_b

    def to_dict(self):
        return {"kind": "corner", **self.profile.to_dict()}


@dataclass(frozen=True)
class PiecewiseCurve:
    """Closed, counterclockwise curve made of parametric segments."""

    segments: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        lengths = np.array([s.length for s in self.segments])
        object.__setattr__(self, "_lengths", lengths)
        object.__setattr__(self, "_offsets", np.concatenate([[0.0], np.cumsum(lengths)]))

    @property
    def segment_lengths(self):
        return self._lengths

    @property
    def total_length(self):
        return float(self._offsets[-1])

    def locate(self, s):
        """Segment index and segment parameter at arclength ``s`` (wrapped)."""
        s = float(s) % self.total_length
        idx = int(np.searchsorted(self._offsets, s, side="right") - 1)
        idx = min(max(idx, 0), len(self.segments) - 1)
        seg = self.segments[idx]
        return idx, seg.param_at_arclength(s - self._offsets[idx])

    def to_dict(self):
        return {
            "segments": [s.to_dict() for s in self.segments],
            "total_length": self.total_length,
            "metadata": self.metadata,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def evaluate_at_arclengths(self, s):
        """Position and first two parameter derivatives at arclengths ``s`` (wrapped)."""
        s = np.mod(np.ravel(np.asarray(s, dtype=float)), self.total_length)
        idx = np.clip(np.searchsorted(self._offsets, s, side="right") - 1, 0, len(self.segments) - 1)
        pos, d1, d2 = (np.empty((len(s), 2)) for _ in range(3))
        for i, seg in enumerate(self.segments):
            sel = idx == i
            if np.any(sel):
                local = np.minimum(s[sel] - self._offsets[i], seg.length)
                pos[sel], d1[sel], d2[sel] = seg.evaluate(seg.params_at_arclengths(local))
        return pos, d1, d2

    def sample(self, n):
        """Dense polyline: arrays ``(t, points, curvature)`` at ``n`` uniform arclengths."""
        t = np.linspace(0.0, self.total_length, n, endpoint=False)
        pts, d1, d2 = self.evaluate_at_arclengths(t)
        speed = np.hypot(d1[:, 0], d1[:, 1])
        kap = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
        return t, pts, kap

    def polyline_csv(self, n=2000):
        t, pts, kap = self.sample(n)
        lines = ["t,x,y,curvature"]
        lines += [f"{a:.17g},{p[0]:.17g},{p[1]:.17g},{c:.17g}" for a, p, c in zip(t, pts, kap)]
        return "\n".join(lines) + "\n"


def curve_eval(curve, t):
    """Position, unit tangent and signed curvature at arclength ``t``.

    ``t`` is wrapped modulo the total length.
    """
    idx, param = curve.locate(t)
    pos, d1, d2 = curve.segments[idx].evaluate(np.array([param]))
    d1, d2 = d1[0], d2[0]
    speed = math.hypot(d1[0], d1[1])
    kappa = (d1[0] * d2[1] - d1[1] * d2[0]) / speed**3
    return pos[0], d1 / speed, kappa


def circle_curve(radius=1.0, center=(0.0, 0.0)):
    """A full circle as a one-segment curve."""
    return PiecewiseCurve(
        (ArcSegment(np.asarray(center, dtype=float), float(radius), 0.0, 2 * math.pi),),
        metadata={"shape": "circle", "radius": float(radius)},
    )


def polygon_curve(polygon):
    """The unsmoothed polygon as a curve of line segments."""
    v = polygon.vertices
    n = len(v)
    segs = tuple(LineSegment(v[i].copy(), v[(i + 1) % n].copy()) for i in range(n))
    return PiecewiseCurve(segs, metadata={"shape": "polygon", "n_vertices": n})


# ---------------------------------------------------------------------------
# Corner rounding
# ---------------------------------------------------------------------------
def corner_frame(polygon, j):
    """Vertex, graph axes and interior angle of vertex ``j``."""
    v = polygon.vertices
    n = len(v)
    p = v[j]
    d_prev = v[(j - 1) % n] - p
    d_next = v[(j + 1) % n] - p
    d_prev = d_prev / np.hypot(*d_prev)
    d_next = d_next / np.hypot(*d_next)
    theta = float(polygon.interior_angles()[j])
    # interior bisector: rotate the outgoing edge counterclockwise by theta/2
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    e2 = np.array([c * d_next[0] - s * d_next[1], s * d_next[0] + c * d_next[1]])
    # graph axis points along the direction of travel (from prev edge to next edge)
    e1 = np.array([e2[1], -e2[0]])
    return p, e1, e2, theta


def round_polygon(polygon, h, kernel=None):
    """Round every vertex of ``polygon`` by convolution with ``kernel``.

    ``h`` is the length along each edge that is modified on either side of a
    vertex; the kernel width in graph coordinates is ``h sin(theta/2)``.  For
    the Gaussian kernel the modified zone is the same and its standard
    deviation is chosen by :func:`select_delta`.

    Raises
    ------
    InvalidArgumentError
        If ``h`` is not smaller than half the shortest edge.
    """
    kernel = kernel or SmoothingKernel()
    min_edge = float(polygon.edge_lengths.min())
    if not (0 < h < 0.5 * min_edge):
        raise InvalidArgumentError(
            f"h={h!r} must satisfy 0 < h < min edge / 2 = {0.5 * min_edge:.6g} (min edge {min_edge:.6g})"
        )
    n = polygon.n_vertices
    corners = []
    for j in range(n):
        p, e1, e2, theta = corner_frame(polygon, j)
        half = h * math.sin(theta / 2)
        a = 1.0 / math.tan(theta / 2)
        if kernel.kind == "polynomial":
            width = half
        else:
            width = select_delta(2 * half, a, kernel.eps)
        corners.append(CornerProfile(a, 0.0, half, width, kernel, p, e1, e2))

    segments = []
    v = polygon.vertices
    for j in range(n):
        seg_c = RoundedCorner(corners[j])
        segments.append(seg_c)
        nxt = (j + 1) % n
        start = seg_c.evaluate(np.array([corners[j].half_width]))[0][0]
        end = RoundedCorner(corners[nxt]).evaluate(np.array([-corners[nxt].half_width]))[0][0]
        if kernel.kind == "gaussian":
            # glue on the exact edge; the profile differs from it by at most eps
            d = v[nxt] - v[j]
            d = d / np.hypot(*d)
            start = v[j] + h * d
            end = v[nxt] - h * d
        segments.append(LineSegment(start, end))
    meta = {
        "shape": "rounded-polygon",
        "h": float(h),
        "kernel": kernel.label(),
        "zone_convention": "graph half-width = h*sin(theta/2); edge length h replaced per side",
        "n_vertices": n,
    }
    return PiecewiseCurve(tuple(segments), metadata=meta)
