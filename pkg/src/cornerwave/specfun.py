"""Special functions: error function, log-gamma, half-integer Bessel J and
Hankel functions H0^(1), H1^(1) of complex argument.

The Hankel functions use three regimes selected by ``|z|``:

==================  ====================================================
``|z| <= 6.5``      ascending (Frobenius) series with the logarithmic term
``6.5 < |z| <= 20``   generalized Gauss-Laguerre quadrature of Hankel's
                    integral representation (20 nodes up to 8, then 12)
``|z| > 20``        Hankel asymptotic expansion, at most 20 terms
==================  ====================================================

Every regime is accurate to a few ulps in the upper half plane with
``|Im z| <= |Re z|``; see ``tests/test_specfun.py`` for the cross checks.
"""

import math

import numpy as np
from scipy import special as _sp

from .errors import InvalidArgumentError, SingularityError

EULER_GAMMA = 0.57721566490153286061

SERIES_RADIUS = 6.5  # 20-node Laguerre is only ~3e-11 accurate at |z| = 4
ASYMPTOTIC_RADIUS = 20.0
N_SERIES_TERMS = 34
N_ASYMPTOTIC_TERMS = 20
N_LAGUERRE_NODES = 20  # for |z| <= LAGUERRE_SPLIT
N_LAGUERRE_NODES_FAR = 12  # for LAGUERRE_SPLIT < |z| <= ASYMPTOTIC_RADIUS
LAGUERRE_SPLIT = 8.0

_LAG_RULES = {
    n: _sp.roots_genlaguerre(n, -0.5) for n in (N_LAGUERRE_NODES, N_LAGUERRE_NODES_FAR)
}


def erf(x):
    """Error function, vectorized."""
    return _sp.erf(x)


def log_gamma(x):
    """``ln Gamma(x)`` for positive ``x``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise InvalidArgumentError("log_gamma requires x > 0")
    out = _sp.gammaln(x)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Half-integer order Bessel functions
# ---------------------------------------------------------------------------
def _spherical_jn(n, x):
    """Spherical Bessel j_n(x) for x > 0 (array), integer n >= 0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)

    up = x >= n
    if np.any(up):
        xu = x[up]
        j0 = np.sin(xu) / xu
        if n == 0:
            out[up] = j0
        else:
            j1 = np.sin(xu) / xu**2 - np.cos(xu) / xu
            for ell in range(1, n):
                j0, j1 = j1, (2 * ell + 1) / xu * j1 - j0
            out[up] = j1

    down = ~up
    if np.any(down):
        xd = x[down]
        # Miller's backward recurrence, normalized by sum (2l+1) j_l^2 = 1
        start = int(max(n, xd.max()) + 40 + 4 * math.sqrt(max(n, xd.max())))
        jp1 = np.zeros_like(xd)
        jl = np.full_like(xd, 1e-30)
        norm = (2 * start + 1) * jl**2
        keep = np.zeros_like(xd)
        for ell in range(start, 0, -1):
            jm1 = (2 * ell + 1) / xd * jl - jp1
            jp1, jl = jl, jm1
            norm += (2 * (ell - 1) + 1) * jl**2
            if ell - 1 == n:
                keep = jl.copy()
            big = np.abs(jl) > 1e100
            if np.any(big):
                s = np.where(big, 1e-100, 1.0)
                jl *= s
                jp1 *= s
                keep *= s
                norm *= s**2
        out[down] = keep / np.sqrt(norm)
    return out


def bessel_j_half(n, x):
    """Bessel function of the first kind of order ``n + 1/2``.

    Parameters
    ----------
    n : int
        Nonnegative integer.
    x : float or array_like
        Strictly positive argument(s).
    """
    if int(n) != n or n < 0:
        raise InvalidArgumentError(f"order index must be a nonnegative integer, got {n!r}")
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise InvalidArgumentError("bessel_j_half requires x > 0")
    val = np.sqrt(2.0 * xa / np.pi) * _spherical_jn(int(n), xa).reshape(xa.shape)
    return float(val) if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# Hankel functions of the first kind, orders 0 and 1
# ---------------------------------------------------------------------------
def _hankel_series(z):
    """H0, H1 by ascending series; intended for |z| <= SERIES_RADIUS."""
    w = z / 2
    w2 = w * w
    log_term = np.log(w) + EULER_GAMMA

    j0 = np.zeros_like(z)
    j1 = np.zeros_like(z)
    y0_sum = np.zeros_like(z)
    y1_sum = np.zeros_like(z)
    t0 = np.ones_like(z)  # (-1)^m w^{2m} / (m!)^2
    t1 = w.copy()  # (-1)^m w^{2m+1} / (m! (m+1)!)
    harmonic = 0.0
    # terms needed: (|z|/2)^(2m) / (m!)^2 below 1e-18 for the largest |z|
    big = float(np.abs(w).max()) if w.size else 0.0
    n_terms, mag = N_SERIES_TERMS, 1.0
    for m in range(1, N_SERIES_TERMS):
        mag *= big * big / (m * m)
        if mag < 1e-18:
            n_terms = m + 1
            break
    for m in range(n_terms):
        j0 += t0
        j1 += t1
        if m > 0:
            y0_sum -= harmonic * t0
        # psi(m+1) + psi(m+2) + 2*gamma = 2 H_m + 1/(m+1)
        y1_sum += (2 * harmonic + 1.0 / (m + 1)) * t1
        harmonic += 1.0 / (m + 1)
        t0 = -t0 * w2 / ((m + 1) ** 2)
        t1 = -t1 * w2 / ((m + 1) * (m + 2))
    y0 = (2 / np.pi) * (log_term * j0 + y0_sum)
    y1 = -2 / (np.pi * z) + (2 / np.pi) * log_term * j1 - y1_sum / np.pi
    return j0 + 1j * y0, j1 + 1j * y1


def _hankel_laguerre(z, n_nodes=N_LAGUERRE_NODES):
    """H0, H1 from Hankel's integral by Gauss-Laguerre quadrature."""
    acc0 = np.zeros_like(z)
    acc1 = np.zeros_like(z)
    c = 0.5j / z
    nodes, weights = _LAG_RULES[n_nodes]
    for u, wt in zip(nodes, weights):
        root = np.sqrt(1.0 + c * u)
        acc0 += wt / root
        acc1 += (wt * u) * root
    pref = np.sqrt(2.0 / (np.pi * z)) * np.exp(1j * (z - np.pi / 4)) / math.sqrt(math.pi)
    return pref * acc0, -1j * pref * 2.0 * acc1


def _hankel_asymptotic(z):
    """H0, H1 by the Hankel expansion; intended for |z| > 20."""
    out = []
    small = float(np.abs(z).min()) if z.size else 1.0
    for nu in (0, 1):
        mu = 4 * nu * nu
        # stop once the largest term bound drops below 1e-17
        n_terms, mag = N_ASYMPTOTIC_TERMS, 1.0
        for m in range(N_ASYMPTOTIC_TERMS):
            mag *= abs(mu - (2 * m + 1) ** 2) / (8.0 * (m + 1) * small)
            if mag < 1e-17:
                n_terms = m + 1
                break
        term = np.ones_like(z)
        total = np.zeros_like(z)
        for m in range(n_terms):
            total += term
            term = term * (1j * (mu - (2 * m + 1) ** 2) / (8.0 * (m + 1))) / z
        out.append(
            np.sqrt(2.0 / (np.pi * z)) * np.exp(1j * (z - nu * np.pi / 2 - np.pi / 4)) * total
        )
    return out[0], out[1]


def _hankel_series_banded(z):
    """Series evaluation split by magnitude so small arguments use few terms."""
    h0 = np.empty_like(z)
    h1 = np.empty_like(z)
    az = np.abs(z)
    lo = 0.0
    for hi in (0.05, 0.5, 1.5, np.inf):
        band = (az > lo) & (az <= hi)
        if np.any(band):
            h0[band], h1[band] = _hankel_series(z[band])
        lo = hi
    return h0, h1


def hankel01(z):
    """Return ``(H0^(1)(z), H1^(1)(z))`` for complex array ``z``.

    Raises
    ------
    SingularityError
        If any ``z == 0``.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise SingularityError("Hankel function is singular at z = 0")
    shape = z.shape
    zf = z.ravel()
    h0 = np.empty_like(zf)
    h1 = np.empty_like(zf)
    az = np.abs(zf)
    for mask, fn in (
        (az <= SERIES_RADIUS, _hankel_series_banded),
        ((az > SERIES_RADIUS) & (az <= LAGUERRE_SPLIT), _hankel_laguerre),
        (
            (az > LAGUERRE_SPLIT) & (az <= ASYMPTOTIC_RADIUS),
            lambda v: _hankel_laguerre(v, N_LAGUERRE_NODES_FAR),
        ),
        (az > ASYMPTOTIC_RADIUS, _hankel_asymptotic),
    ):
        if np.any(mask):
            a, b = fn(zf[mask])
            h0[mask] = a
            h1[mask] = b
    return h0.reshape(shape), h1.reshape(shape)


def hankel1(order, z):
    """Hankel function of the first kind ``H_order^(1)(z)`` for order 0 or 1."""
    if order not in (0, 1):
        raise InvalidArgumentError(f"only orders 0 and 1 are supported, got {order!r}")
    h0, h1 = hankel01(z)
    res = h0 if order == 0 else h1
    return complex(res) if res.ndim == 0 else res


def bessel_jy01(x):
    """``(J0, J1, Y0, Y1)`` at real positive ``x`` via the Hankel functions."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise InvalidArgumentError("bessel_jy01 requires x > 0")
    h0, h1 = hankel01(x.astype(complex))
    return h0.real, h1.real, h0.imag, h1.imag
