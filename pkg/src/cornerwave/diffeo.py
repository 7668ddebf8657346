"""Harmonic extensions of boundary maps onto the closed unit disk.

Two constructions are provided:

* the harmonic (Poisson) extension of a Fourier boundary map
  ``z(theta) = sum c_j e^{ij theta}`` onto the disk, which is a
  diffeomorphism of the open disk whenever ``z`` is a homeomorphism onto a
  convex curve;
* the curve ``G(theta) = g (cos, sin) + g' (-sin, cos)`` defined by a support
  function ``g`` and its harmonic extension
  ``sum beta_{n-1} (2 - n) r^|n| e^{in theta}``.

Points are returned as ``(..., 2)`` real arrays.
"""

import json
import math

import numpy as np

from .errors import InfeasibleToleranceError, InvalidArgumentError

COEFF_TOL = 1e-14  # relative; keeps the summed tail below 1e-12 for the rounded polygons
MIN_LOG2 = 6
MAX_LOG2 = 18
CONVEXITY_GRID = 4096


def _fft_coefficients(samples):
    """Coefficients ``c_j`` for ``j = -M/2+1 .. M/2-1`` from ``M`` uniform samples."""
    m = len(samples)
    c = np.fft.fft(samples) / m
    half = m // 2
    idx = np.concatenate([np.arange(-half + 1, 0), np.arange(0, half)])
    return idx, c[idx % m]


def _adaptive_coefficients(fn, tol=COEFF_TOL, min_log2=MIN_LOG2, max_log2=MAX_LOG2):
    """Truncated Fourier coefficients of a periodic function sampled by ``fn(theta)``.

    The sample count doubles until every coefficient in the upper half of the
    resolved band is below ``tol`` times the largest; the series is then cut at
    the last index that is not.
    """
    for p in range(min_log2, max_log2 + 1):
        m = 2**p
        theta = 2 * math.pi * np.arange(m) / m
        idx, c = _fft_coefficients(np.asarray(fn(theta), dtype=complex))
        scale = np.abs(c).max()
        small = np.abs(c) <= tol * scale
        band = np.abs(idx) >= m // 4
        if np.all(small[band]):
            n = int(np.abs(idx[~small]).max()) if np.any(~small) else 0
            keep = np.abs(idx) <= n
            out = np.zeros(2 * n + 1, dtype=complex)
            out[idx[keep] + n] = c[keep]
            return out
    raise InfeasibleToleranceError(f"Fourier coefficients did not fall below {tol:g} with 2^{max_log2} samples")


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(~((r >= 0) & (r <= 1))):
        raise InvalidArgumentError("radius must lie in [0, 1]")
    return r


def _series(coeffs, r, theta):
    """``sum c_j r^|j| e^{ij theta}`` as ``h(w) + k(conj w)`` with two Horner sweeps."""
    n = (len(coeffs) - 1) // 2
    r, theta = np.broadcast_arrays(_check_r(r), np.asarray(theta, dtype=float))
    w = r * np.exp(1j * theta)
    wc = np.conj(w)
    pos = np.full(w.shape, coeffs[2 * n], dtype=complex)
    neg = np.full(w.shape, coeffs[0], dtype=complex)
    for j in range(n - 1, 0, -1):
        pos = pos * w + coeffs[n + j]
        neg = neg * wc + coeffs[n - j]
    if n == 0:
        return np.full(w.shape, coeffs[0], dtype=complex)
    return coeffs[n] + pos * w + neg * wc


def _to_points(z):
    return np.stack([z.real, z.imag], axis=-1)


# ---------------------------------------------------------------------------
# Harmonic extension of a boundary map
# ---------------------------------------------------------------------------
class FourierBoundaryMap:
    """Boundary map ``theta -> x + iy = sum_{|j| <= N} c_j e^{ij theta}``."""

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim != 1 or len(c) % 2 != 1:
            raise InvalidArgumentError("coefficients must be a 1D array of odd length (indices -N..N)")
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError("coefficients must be finite")
        self.coeffs = c
        self.coeffs.setflags(write=False)

    @property
    def order(self):
        return (len(self.coeffs) - 1) // 2

    def coefficient(self, j):
        n = self.order
        return complex(self.coeffs[j + n]) if abs(j) <= n else 0j

    @classmethod
    def from_function(cls, fn, tol=COEFF_TOL):
        """Adaptive FFT fit of a complex-valued periodic map ``fn(theta)``."""
        return cls(_adaptive_coefficients(fn, tol))

    @classmethod
    def from_dict(cls, mapping):
        """From ``{j: c_j}``."""
        n = max(abs(int(j)) for j in mapping)
        c = np.zeros(2 * n + 1, dtype=complex)
        for j, v in mapping.items():
            c[int(j) + n] = v
        return cls(c)

    def boundary(self, theta):
        return _to_points(_series(self.coeffs, np.ones_like(np.asarray(theta, dtype=float)), theta))

    def to_json(self):
        n = self.order
        return json.dumps(
            {"indices": list(range(-n, n + 1)), "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()},
            indent=1,
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(np.asarray(d["re"]) + 1j * np.asarray(d["im"]))


def harmonic_extension(bmap, r, theta):
    """``Phi(theta, r) = sum c_j r^|j| e^{ij theta}`` as points.

    Raises
    ------
    InvalidArgumentError
        If any ``r`` lies outside [0, 1].
    """
    return _to_points(_series(bmap.coeffs, r, theta))


def jacobian(bmap, r, theta):
    """Jacobian determinant of the extension in Cartesian disk coordinates.

    Writing the map as ``h(w) + conj(k(w))`` with ``h = sum_{j>=0} c_j w^j``
    and ``k = sum_{j>=1} conj(c_-j) w^j`` gives ``J = |h'|^2 - |k'|^2``.
    """
    n = bmap.order
    c = bmap.coeffs
    r, theta = np.broadcast_arrays(_check_r(r), np.asarray(theta, dtype=float))
    w = r * np.exp(1j * theta)
    hp = np.zeros(w.shape, dtype=complex)
    kp = np.zeros(w.shape, dtype=complex)
    for j in range(n, 0, -1):  # Horner for the derivatives
        hp = hp * w + j * c[n + j]
        kp = kp * w + j * np.conj(c[n - j])
    return np.abs(hp) ** 2 - np.abs(kp) ** 2


def circle_map(radius=1.0, center=(0.0, 0.0)):
    return FourierBoundaryMap.from_dict({0: complex(*center), 1: radius})


def ellipse_map(a, b, center=(0.0, 0.0)):
    """``theta -> (a cos theta, b sin theta)``: ``c_1 = (a+b)/2``, ``c_-1 = (a-b)/2``."""
    return FourierBoundaryMap.from_dict({-1: (a - b) / 2, 0: complex(*center), 1: (a + b) / 2})


def arclength_points(curve, theta):
    """Points of ``curve`` at arclength ``L theta / (2 pi)`` from the start of its first segment."""
    theta = np.asarray(theta, dtype=float)
    pts, _, _ = curve.evaluate_at_arclengths(theta * (curve.total_length / (2 * math.pi)))
    return pts.reshape(theta.shape + (2,))


def arclength_map(curve, tol=COEFF_TOL):
    """Boundary map of a closed curve parameterized proportionally to arclength.

    ``theta`` in [0, 2 pi) corresponds to arclength ``L theta / (2 pi)``
    measured from the start of the first segment.
    """

    def sample(theta):
        pts = arclength_points(curve, theta)
        return pts[:, 0] + 1j * pts[:, 1]

    return FourierBoundaryMap.from_function(sample, tol)


# ---------------------------------------------------------------------------
# Support-function curves
# ---------------------------------------------------------------------------
class SupportFunction:
    """Real support function ``g(theta) = sum beta_n e^{in theta}``, ``beta_-n = conj(beta_n)``."""

    def __init__(self, beta):
        b = np.asarray(beta, dtype=complex)
        if b.ndim != 1 or len(b) % 2 != 1:
            raise InvalidArgumentError("beta must be a 1D array of odd length (indices -N..N)")
        if not np.allclose(b, np.conj(b[::-1]), rtol=0, atol=1e-14 * max(1.0, np.abs(b).max())):
            raise InvalidArgumentError("beta_-n must equal conj(beta_n) for a real support function")
        self.beta = b
        self.beta.setflags(write=False)

    @property
    def order(self):
        return (len(self.beta) - 1) // 2

    @classmethod
    def constant(cls, radius):
        return cls(np.array([radius], dtype=complex))

    @classmethod
    def from_cosines(cls, cos_coeffs):
        """From ``g = sum_n a_n cos(n theta)`` given as ``{n: a_n}``."""
        n = max(cos_coeffs)
        b = np.zeros(2 * n + 1, dtype=complex)
        for m, a in cos_coeffs.items():
            if m == 0:
                b[n] += a
            else:
                b[n + m] += a / 2
                b[n - m] += a / 2
        return cls(b)

    @classmethod
    def from_function(cls, g, tol=COEFF_TOL):
        c = _adaptive_coefficients(g, tol)
        return cls(0.5 * (c + np.conj(c[::-1])))

    def derivative(self, theta, order=0):
        n = self.order
        j = np.arange(-n, n + 1)
        theta = np.asarray(theta, dtype=float)
        e = np.exp(1j * np.multiply.outer(theta, j))
        return np.real(e @ (self.beta * (1j * j) ** order))

    def __call__(self, theta):
        return self.derivative(theta, 0)

    def curvature_radius(self, theta):
        """``g + g''``; positive everywhere iff the curve is strictly convex."""
        return self.derivative(theta, 0) + self.derivative(theta, 2)

    def check_convex(self, n_grid=CONVEXITY_GRID):
        theta = 2 * math.pi * np.arange(n_grid) / n_grid
        rho = self.curvature_radius(theta)
        if not np.all(rho > 0):
            i = int(np.argmin(rho))
            raise InvalidArgumentError(
                f"support function is not strictly convex: g + g'' = {rho[i]:.3e} at theta = {theta[i]:.6f}"
            )

    def boundary_map(self):
        """Fourier boundary map with coefficients ``c_n = beta_{n-1} (2 - n)``."""
        n = self.order
        c = np.zeros(2 * (n + 1) + 1, dtype=complex)
        for m in range(-n, n + 1):
            c[(m + 1) + (n + 1)] = self.beta[m + n] * (1 - m)
        return FourierBoundaryMap(c)

    def to_json(self):
        n = self.order
        return json.dumps(
            {"indices": list(range(-n, n + 1)), "re": self.beta.real.tolist(), "im": self.beta.imag.tolist()},
            indent=1,
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(np.asarray(d["re"]) + 1j * np.asarray(d["im"]))


def gauss_map_curve(g, theta):
    """``G(theta) = g (cos, sin) + g' (-sin, cos)``; the outward normal at ``theta`` is ``(cos, sin)``.

    Raises
    ------
    InvalidArgumentError
        If ``g + g''`` is not positive on the 4096-point grid.
    """
    g.check_convex()
    theta = np.asarray(theta, dtype=float)
    g0 = g.derivative(theta, 0)
    g1 = g.derivative(theta, 1)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([g0 * c - g1 * s, g0 * s + g1 * c], axis=-1)


def gauss_map_extension(g, r, theta):
    """Harmonic extension ``sum beta_{n-1} (2 - n) r^|n| e^{in theta}`` of :func:`gauss_map_curve`."""
    g.check_convex()
    return harmonic_extension(g.boundary_map(), r, theta)


def ellipse_support(a, b, tol=COEFF_TOL):
    """Support function ``sqrt(a^2 cos^2 + b^2 sin^2)`` of an ellipse."""
    return SupportFunction.from_function(lambda t: np.sqrt((a * np.cos(t)) ** 2 + (b * np.sin(t)) ** 2), tol)


def smoothed_square_support(side=1.0, width=0.1, offset=0.05, tol=COEFF_TOL):
    """Strictly convex rounded square for the support-function construction.

    The square's support function ``(side/2)(|cos| + |sin|)`` is convolved in
    angle with a Gaussian of standard deviation ``width`` and shifted by
    ``offset``; this makes ``g + g''`` smooth and at least ``offset``.
    """
    n_max = int(math.ceil(math.sqrt(2 * math.log(1 / tol)) / width)) + 4
    b = np.zeros(2 * n_max + 1, dtype=complex)
    # |cos t| = 2/pi + (4/pi) sum_m (-1)^(m+1) cos(2mt) / (4m^2 - 1); |sin t| has (-1) -> +1 ... sign pattern
    for m in range(1, n_max // 2 + 1):
        a_cos = (4 / math.pi) * (-1) ** (m + 1) / (4 * m * m - 1)
        a_sin = -(4 / math.pi) / (4 * m * m - 1)
        coef = 0.5 * side * (a_cos + a_sin) * math.exp(-0.5 * (2 * m * width) ** 2)
        b[n_max + 2 * m] += coef / 2
        b[n_max - 2 * m] += coef / 2
    b[n_max] = 0.5 * side * 4 / math.pi + offset
    beta = np.asarray(b)
    keep = np.abs(beta) > tol * np.abs(beta).max()
    n = int(np.abs(np.arange(-n_max, n_max + 1)[keep]).max())
    return SupportFunction(beta[n_max - n : n_max + n + 1])


def sample_csv(points, r, theta):
    """CSV rows ``r, theta, x, y`` for sampled map values."""
    r = np.ravel(r)
    theta = np.ravel(theta)
    pts = np.reshape(points, (-1, 2))
    lines = ["r,theta,x,y"]
    lines += [f"{a:.17g},{b:.17g},{p[0]:.17g},{p[1]:.17g}" for a, b, p in zip(r, theta, pts)]
    return "\n".join(lines) + "\n"
