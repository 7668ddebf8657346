"""Incident and scattered fields, cross sections, error metrics and order fits."""

import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special as sp
from scipy.spatial import cKDTree

from . import panels
from .errors import InvalidArgumentError, NearBoundaryError
from .layerpot import _combined
from .solver import (
    GeometrySource,
    PlaneWave,
    ScatteringProblem,
    factorize,
    plane_wave_field,
    point_source_field,
)

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 360
NEAR_PANEL_LENGTHS = 2.0
TARGET_CHUNK = 256


# ---------------------------------------------------------------------------
# Incident fields
# ---------------------------------------------------------------------------
def plane_wave(phi, k, x):
    """Value and gradient of ``exp(ik(x cos phi + y sin phi))`` at points ``x``."""
    return plane_wave_field(phi, k, x)


def point_source(x0, k, x):
    """Value and gradient of ``g_k(x, x0) = (i/4) H0(k|x - x0|)``."""
    return point_source_field(x0, k, x)


# ---------------------------------------------------------------------------
# Potential evaluation
# ---------------------------------------------------------------------------
def check_clearance(mesh, targets, factor=NEAR_PANEL_LENGTHS):
    """Raise :class:`NearBoundaryError` for the first target within ``factor`` panel lengths of the boundary."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    tree = cKDTree(targets)
    for p in range(mesh.n_panels):
        pts = mesh.nodes[mesh.panel_slice(p)]
        reach = factor * mesh.panel_lengths[p]
        hits = set()
        for q in pts:
            hits.update(tree.query_ball_point(q, reach))
        if hits:
            i = min(hits)
            dist = float(np.hypot(*(mesh.nodes - targets[i]).T).min())
            raise NearBoundaryError(i, targets[i], dist)


def _potential(density, targets, kind, jobs=1):
    mesh = density.mesh
    out = np.empty(len(targets), dtype=complex)
    sw = density.values * mesh.weights
    chunks = [slice(a, min(a + TARGET_CHUNK, len(targets))) for a in range(0, len(targets), TARGET_CHUNK)]

    def work(sl):
        d = targets[sl][:, None, :] - mesh.nodes[None, :, :]
        r = np.hypot(d[..., 0], d[..., 1])
        dny = np.einsum("ijc,jc->ij", d, mesh.normals)
        out[sl] = _combined(kind, density.k, density.eta, r, None, dny) @ sw

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, chunks))
    else:
        for sl in chunks:
            work(sl)
    return out


def eval_field(density, targets, jobs=1):
    """Scattered field of ``density`` at ``targets`` by the plain panel rule.

    Raises
    ------
    NearBoundaryError
        If a target lies within two panel lengths of the boundary.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape[1] != 2:
        raise InvalidArgumentError("targets must have shape (m, 2)")
    check_clearance(density.mesh, targets)
    return _potential(density, targets, density.representation, jobs)


# ---------------------------------------------------------------------------
# Cross sections
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class CrossSection:
    """Complex field samples on an angle grid.

    ``kind`` is ``"bi-static"``, ``"mono-static"`` or ``"far-field"``.
    """

    kind: str
    radius: float
    theta: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("bi-static", "mono-static", "far-field"):
            raise InvalidArgumentError(f"unknown cross-section kind {self.kind!r}")
        th = np.asarray(self.theta, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if th.ndim != 1 or th.shape != vals.shape:
            raise InvalidArgumentError("theta and values must be 1D arrays of equal length")
        if np.any(np.diff(th) <= 0) or th[0] < 0 or th[-1] >= 2 * math.pi:
            raise InvalidArgumentError("theta must be strictly increasing in [0, 2 pi)")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("cross section has non-finite samples")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "values", vals)

    def to_csv(self):
        db = to_db(self)
        lines = ["theta,re,im,db"]
        for t, v, d in zip(self.theta, self.values, db):
            lines.append(f"{t:.17g},{v.real:.17g},{v.imag:.17g},{d:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text, kind="bi-static", radius=0.0):
        rows = [ln.split(",") for ln in text.splitlines() if ln and not ln.startswith(("#", "theta"))]
        arr = np.array(rows, dtype=float)
        return cls(kind, radius, arr[:, 0], arr[:, 1] + 1j * arr[:, 2])


def angle_grid(m):
    if int(m) != m or m < 8:
        raise InvalidArgumentError(f"need at least 8 angles, got {m!r}")
    return 2 * math.pi * np.arange(int(m)) / int(m)


def centroid_of(mesh):
    """Area centroid of the region enclosed by the mesh."""
    return panels.interior_point(mesh)


def _circle_points(centre, radius, theta):
    return centre + radius * np.column_stack([np.cos(theta), np.sin(theta)])


def _require_exterior_circle(mesh, centre, radius):
    span = float(np.hypot(*(mesh.nodes - centre).T).max())
    if not radius > span + NEAR_PANEL_LENGTHS * mesh.panel_lengths.max():
        raise InvalidArgumentError(
            f"evaluation circle of radius {radius:g} about ({centre[0]:.6g}, {centre[1]:.6g}) "
            f"meets the boundary (boundary extends to {span:.6g})"
        )


def cross_section_near(density, d, m=DEFAULT_SAMPLES, centre=None, jobs=1):
    """Bi-static section: the scattered field on the circle of radius ``d`` about the centroid."""
    mesh = density.mesh
    c = centroid_of(mesh) if centre is None else np.asarray(centre, dtype=float)
    _require_exterior_circle(mesh, c, d)
    theta = angle_grid(m)
    vals = eval_field(density, _circle_points(c, d, theta), jobs)
    meta = {"centre": c.tolist(), "samples": int(m), "grid": "uniform, endpoint excluded"}
    return CrossSection("bi-static", float(d), theta, vals, meta)


FAR_FIELD_PREFACTOR = "sqrt(1/(8 pi k)) exp(i pi/4) exp(ik|x-c|)/sqrt(|x-c|)"


def cross_section_far(density, m=DEFAULT_SAMPLES, centre=None):
    """Far-field signature ``F(theta)`` about the centroid ``c``.

    The scattered field behaves like
    ``sqrt(1/(8 pi k)) exp(i pi/4) exp(ik|x-c|)/sqrt(|x-c|) F(theta)``.
    For the single layer ``F = int exp(-ik rhat.(y-c)) sigma ds``; the
    combined-field representation adds ``eta k (rhat.n_y)`` inside the integral.
    """
    mesh = density.mesh
    c = centroid_of(mesh) if centre is None else np.asarray(centre, dtype=float)
    theta = angle_grid(m)
    rhat = np.column_stack([np.cos(theta), np.sin(theta)])
    k = density.k
    phase = np.exp(-1j * k * (rhat @ (mesh.nodes - c).T))
    if density.representation == "cfie":
        phase = phase * (1 + density.eta * k * (rhat @ mesh.normals.T))
    vals = phase @ (density.values * mesh.weights)
    meta = {"centre": c.tolist(), "samples": int(m), "prefactor": FAR_FIELD_PREFACTOR}
    return CrossSection("far-field", math.inf, theta, vals, meta)


def far_field_prefactor(k, d):
    """The prefactor of :func:`cross_section_far` at distance ``d``."""
    return np.sqrt(1 / (8 * np.pi * k)) * np.exp(1j * np.pi / 4) * np.exp(1j * k * d) / np.sqrt(d)


def cross_section_mono(problem, d, m=DEFAULT_SAMPLES, mesh=None, jobs=1):
    """Mono-static section: at angle ``theta`` the incidence is ``theta + pi``.

    The system is factored once and solved for all ``m`` incidences.
    """
    fac = factorize(problem, mesh, jobs)
    c = centroid_of(fac.mesh)
    _require_exterior_circle(fac.mesh, c, d)
    theta = angle_grid(m)
    pts = _circle_points(c, d, theta)
    check_clearance(fac.mesh, pts)
    vals = np.empty(m, dtype=complex)
    for i, th in enumerate(theta):
        dens = fac.solve(problem.with_incidence(PlaneWave(th + math.pi)))
        vals[i] = _potential(dens, pts[i : i + 1], dens.representation)[0]
    meta = {"centre": c.tolist(), "samples": int(m), "incidence": "theta + pi"}
    return CrossSection("mono-static", float(d), theta, vals, meta)


def to_db(c):
    """``10 log10 |u|`` per sample; zero magnitudes map to ``-inf`` with a warning."""
    vals = c.values if isinstance(c, CrossSection) else np.asarray(c)
    mag = np.abs(vals)
    out = np.full(mag.shape, -np.inf)
    pos = mag > 0
    if not np.all(pos):
        warnings.warn(f"{int(np.sum(~pos))} zero-magnitude samples mapped to -inf dB", RuntimeWarning, stacklevel=2)
    out[pos] = 10 * np.log10(mag[pos])
    return out


def compare(a, b):
    """``(RMSE, relative l2)`` of complex differences; ``b`` is the reference.

    Raises
    ------
    InvalidArgumentError
        If kind, radius or angle grid differ.
    """
    if a.kind != b.kind or not (a.radius == b.radius or math.isclose(a.radius, b.radius, rel_tol=1e-12)):
        raise InvalidArgumentError("cross sections differ in kind or radius")
    if a.theta.shape != b.theta.shape or not np.allclose(a.theta, b.theta, rtol=0, atol=1e-12):
        raise InvalidArgumentError("cross sections are on different angle grids")
    diff = a.values - b.values
    rmse = float(np.sqrt(np.mean(np.abs(diff) ** 2)))
    ref = float(np.linalg.norm(b.values))
    rel = float(np.linalg.norm(diff) / ref) if ref > 0 else math.inf
    return rmse, rel


# ---------------------------------------------------------------------------
# Convergence records
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    n: int
    rmse: float
    rel_l2: float


@dataclass
class ConvergenceRecord:
    """Rows ``(h, n, RMSE, relative l2)`` with ``h`` strictly decreasing."""

    rows: list
    reference_nodes: int = None
    fitted_order: float = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = [r if isinstance(r, ConvergenceRow) else ConvergenceRow(**r) for r in self.rows]
        hs = [r.h for r in self.rows]
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise InvalidArgumentError("h must be strictly decreasing")
        if any(r.rmse < 0 or r.rel_l2 < 0 for r in self.rows):
            raise InvalidArgumentError("errors must be nonnegative")

    @classmethod
    def from_columns(cls, h, rel_l2, n=None, rmse=None):
        n = n if n is not None else [0] * len(h)
        rmse = rmse if rmse is not None else [0.0] * len(h)
        return cls([ConvergenceRow(float(a), int(b), float(c), float(d)) for a, b, c, d in zip(h, n, rmse, rel_l2)])

    def to_dict(self):
        return {
            "rows": [asdict(r) for r in self.rows],
            "reference": {"h": 0.0, "n": self.reference_nodes},
            "fitted_order": self.fitted_order,
            "metadata": self.metadata,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        ref = d.get("reference") or {}
        return cls(d["rows"], ref.get("n"), d.get("fitted_order"), d.get("metadata", {}))


def fit_order(record):
    """Least-squares slope of ``log(rel_l2)`` against ``log(h)``."""
    if not isinstance(record, ConvergenceRecord):
        h, err = record
        record = ConvergenceRecord.from_columns(h, err)
    if len(record.rows) < 3:
        raise InvalidArgumentError("fitting an order needs at least 3 points")
    h = np.array([r.h for r in record.rows])
    e = np.array([r.rel_l2 for r in record.rows])
    if np.any(h <= 0) or np.any(e <= 0):
        raise InvalidArgumentError("h and errors must be positive to fit an order")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def convergence_study(polygon, bc, k, phi, hs, kernel=None, d=10.0, m=DEFAULT_SAMPLES, tol=None, jobs=1,
                      depth_scale=1e-10, on_row=None):
    """Bi-static sections for each ``h`` compared with the corner-reference solution.

    ``on_row(record)`` is called after the reference and every finished row,
    so callers can persist partial results.
    """
    hs = [float(h) for h in hs]
    kw = {} if tol is None else {"tol": tol}
    inc = PlaneWave(phi)

    def section(geom, threads):
        prob = ScatteringProblem(geom, bc, k, inc, **kw)
        dens = factorize(prob, jobs=threads).solve()
        return dens, cross_section_near(dens, d, m, centre=polygon.centroid())

    ref_dens, ref = section(GeometrySource.corner_reference(polygon, depth_scale), jobs)
    meta = {"bc": bc, "k": [complex(k).real, complex(k).imag], "phi": inc.phi, "radius": d, "samples": m,
            "kernel": (kernel.label() if kernel else "poly:8")}
    record = ConvergenceRecord([], ref_dens.mesh.n_nodes, None, meta)
    if on_row:
        on_row(record)

    def one(h):
        dens, cs = section(GeometrySource.smoothed(polygon, h, kernel), 1)
        rmse, rel = compare(cs, ref)
        return ConvergenceRow(h, dens.mesh.n_nodes, rmse, rel)

    rows = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(one, h) for h in hs]
            for fut in futures:
                rows.append(fut.result())
                record.rows = list(rows)
                if on_row:
                    on_row(record)
    else:
        for h in hs:
            rows.append(one(h))
            record.rows = list(rows)
            if on_row:
                on_row(record)
    record.rows = rows
    if len(rows) >= 3:
        record.fitted_order = fit_order(record)
    return record


# ---------------------------------------------------------------------------
# Disc oracle
# ---------------------------------------------------------------------------
def disc_series(k, radius, bc, phi, points, center=(0.0, 0.0)):
    """Scattered field of a plane wave by a disc, by separation of variables.

    Sound-soft: ``u = -sum i^n J_n(ka)/H_n(ka) H_n(kr) e^{in(theta - phi)}``;
    sound-hard uses ``J_n'/H_n'``.  Orders up to ``|ka| + 40 + 4 |ka|^(1/3)``
    are kept, past which the coefficients are below double precision.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(center, dtype=float)
    r = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 1], pts[:, 0])
    ka = k * radius
    total = np.zeros(len(pts), dtype=complex)
    n_max = int(abs(ka) + 40 + 4 * abs(ka) ** (1 / 3))
    for n in range(-n_max, n_max + 1):
        if bc == "dirichlet":
            coef = sp.jv(n, ka) / sp.hankel1(n, ka)
        else:
            coef = sp.jvp(n, ka) / sp.h1vp(n, ka)
        term = -(1j**n) * coef * sp.hankel1(n, k * r) * np.exp(1j * n * (th - phi))
        total += term
    return total
