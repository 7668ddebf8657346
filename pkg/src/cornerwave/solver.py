"""Dense direct solution of the exterior scattering integral equations."""

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import panels
from .errors import InvalidArgumentError, NearResonanceError
from .geometry import Polygon, SmoothingKernel, circle_curve, round_polygon
from .layerpot import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    Wavenumber,
    assemble,
    formulation_kernel,
    l2_weight,
    unweight,
)
from .specfun import hankel01

logger = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 20_000
RCOND_FLOOR = 1e-13
BC_FORMULATION = {"dirichlet": "dirichlet-cfie", "neumann": "neumann-single-layer"}


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GeometrySource:
    """Where the boundary comes from.

    ``kind`` is ``"smoothed"`` (polygon rounded with ``h`` and ``kernel``),
    ``"corner-reference"`` (the exact polygon with dyadic refinement toward
    every vertex down to ``depth_scale`` times the edge length) or
    ``"circle"``.
    """

    kind: str
    polygon: Polygon = None
    h: float = None
    kernel: SmoothingKernel = field(default_factory=SmoothingKernel)
    depth_scale: float = 1e-10
    radius: float = 1.0
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("smoothed", "corner-reference", "circle"):
            raise InvalidArgumentError(f"unknown geometry kind {self.kind!r}")
        if self.kind != "circle" and self.polygon is None:
            raise InvalidArgumentError(f"{self.kind} geometry needs a polygon")
        if self.kind == "smoothed" and not (self.h and self.h > 0):
            raise InvalidArgumentError("smoothed geometry needs h > 0")
        if self.kind == "circle" and not self.radius > 0:
            raise InvalidArgumentError("circle radius must be positive")

    @classmethod
    def smoothed(cls, polygon, h, kernel=None):
        return cls("smoothed", polygon, float(h), kernel or SmoothingKernel())

    @classmethod
    def corner_reference(cls, polygon, depth_scale=1e-10):
        return cls("corner-reference", polygon, depth_scale=float(depth_scale))

    @classmethod
    def circle(cls, radius=1.0, center=(0.0, 0.0)):
        return cls("circle", radius=float(radius), center=tuple(map(float, center)))

    def to_dict(self):
        out = {"kind": self.kind}
        if self.polygon is not None:
            out["vertices"] = self.polygon.vertices.tolist()
        if self.kind == "smoothed":
            out.update(h=self.h, kernel=self.kernel.label())
        elif self.kind == "corner-reference":
            out["depth_scale"] = self.depth_scale
        else:
            out.update(radius=self.radius, center=list(self.center))
        return out

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "circle":
            return cls.circle(d.get("radius", 1.0), d.get("center", (0.0, 0.0)))
        poly = Polygon(np.asarray(d["vertices"], dtype=float))
        if kind == "smoothed":
            return cls.smoothed(poly, d["h"], SmoothingKernel.parse(d.get("kernel", "poly:8")))
        return cls.corner_reference(poly, d.get("depth_scale", 1e-10))


@dataclass(frozen=True)
class PlaneWave:
    """Incident plane wave ``exp(ik(x cos phi + y sin phi))``; ``phi`` is stored in [0, 2 pi)."""

    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise InvalidArgumentError("incidence angle must be finite")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    def to_dict(self):
        return {"kind": "plane-wave", "phi": self.phi}


@dataclass(frozen=True)
class PointSource:
    """Boundary data of ``g_k(., x0)``; its exterior field is known exactly."""

    x0: tuple

    def __post_init__(self):
        x0 = tuple(map(float, self.x0))
        if len(x0) != 2 or not all(map(math.isfinite, x0)):
            raise InvalidArgumentError("point source needs a finite 2D location")
        object.__setattr__(self, "x0", x0)

    def to_dict(self):
        return {"kind": "point-source", "x0": list(self.x0)}


def _incidence_from_dict(d):
    if d["kind"] == "plane-wave":
        return PlaneWave(d["phi"])
    if d["kind"] == "point-source":
        return PointSource(d["x0"])
    raise InvalidArgumentError(f"unknown incidence kind {d['kind']!r}")


@dataclass(frozen=True)
class ScatteringProblem:
    """Exterior sound-soft (Dirichlet) or sound-hard (Neumann) problem."""

    geometry: GeometrySource
    bc: str
    k: complex
    incidence: object
    tol: float = panels.DEFAULT_TOL
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    node_budget: int = DEFAULT_NODE_BUDGET

    def __post_init__(self):
        if self.bc not in BC_FORMULATION:
            raise InvalidArgumentError(f"bc must be 'dirichlet' or 'neumann', got {self.bc!r}")
        object.__setattr__(self, "k", Wavenumber(self.k).value)
        if not isinstance(self.incidence, (PlaneWave, PointSource)):
            raise InvalidArgumentError("incidence must be a PlaneWave or PointSource")

    @property
    def formulation(self):
        return BC_FORMULATION[self.bc]

    @property
    def wavelength(self):
        return 2 * math.pi / self.k.real

    def with_incidence(self, incidence):
        return dataclasses.replace(self, incidence=incidence)

    def to_dict(self):
        return {
            "geometry": self.geometry.to_dict(),
            "bc": self.bc,
            "k": [self.k.real, self.k.imag],
            "incidence": self.incidence.to_dict(),
            "tol": self.tol,
            "alpha": self.alpha,
            "beta": self.beta,
            "node_budget": self.node_budget,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        k = d["k"]
        k = complex(k[0], k[1]) if isinstance(k, (list, tuple)) else complex(k)
        return cls(
            GeometrySource.from_dict(d["geometry"]),
            d["bc"],
            k,
            _incidence_from_dict(d["incidence"]),
            tol=d.get("tol", panels.DEFAULT_TOL),
            alpha=d.get("alpha", DEFAULT_ALPHA),
            beta=d.get("beta", DEFAULT_BETA),
            node_budget=d.get("node_budget", DEFAULT_NODE_BUDGET),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------
def corner_reference_mesh(polygon, k, depth_scale=1e-10):
    """Dyadically refined mesh of the exact polygon for wavenumber ``k``."""
    return panels.corner_reference_mesh(polygon, Wavenumber.coerce(k).wavelength, depth_scale)


def build_mesh(problem):
    g = problem.geometry
    lam = problem.wavelength
    if g.kind == "smoothed":
        return panels.discretize(round_polygon(g.polygon, g.h, g.kernel), problem.tol, lam)
    if g.kind == "corner-reference":
        return corner_reference_mesh(g.polygon, problem.k, g.depth_scale)
    return panels.discretize(circle_curve(g.radius, g.center), problem.tol, lam)


# ---------------------------------------------------------------------------
# Incident data
# ---------------------------------------------------------------------------
def point_source_field(x0, k, x):
    """``g_k(x, x0)`` and its gradient in ``x``."""
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(x0, dtype=float)
    r = np.hypot(d[..., 0], d[..., 1])
    h0, h1 = hankel01(k * r)
    val = 0.25j * h0
    grad = (-0.25j * k * h1 / r)[..., None] * d
    return val, grad


def plane_wave_field(phi, k, x):
    x = np.asarray(x, dtype=float)
    dirn = np.array([math.cos(phi), math.sin(phi)])
    val = np.exp(1j * k * (x @ dirn))
    return val, (1j * k * val)[..., None] * dirn


def boundary_data(problem, mesh):
    """Right-hand side of the boundary equation at the mesh nodes."""
    inc = problem.incidence
    if isinstance(inc, PlaneWave):
        val, grad = plane_wave_field(inc.phi, problem.k, mesh.nodes)
        sign = -1.0  # scattered field cancels the incident trace
    else:
        val, grad = point_source_field(inc.x0, problem.k, mesh.nodes)
        sign = 1.0
    if problem.bc == "dirichlet":
        return sign * val
    return sign * np.sum(grad * mesh.normals, axis=-1)


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Density:
    """Nodal density of the layer-potential representation."""

    mesh: object
    values: np.ndarray
    formulation: str
    k: complex
    eta: complex = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.mesh.n_nodes,):
            raise InvalidArgumentError("density length must equal the node count")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("density has non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def representation(self):
        return formulation_kernel(self.formulation)[1]

    def to_csv(self):
        rows = ["node,x,y,nx,ny,weight,re,im"]
        for j, (x, n, w, s) in enumerate(zip(self.mesh.nodes, self.mesh.normals, self.mesh.weights, self.values)):
            rows.append(
                f"{j},{x[0]:.17g},{x[1]:.17g},{n[0]:.17g},{n[1]:.17g},{w:.17g},{s.real:.17g},{s.imag:.17g}"
            )
        return "\n".join(rows) + "\n"


@dataclass(eq=False)
class Factorization:
    """LU factors of the l2-weighted system, reusable for many right-hand sides."""

    problem: ScatteringProblem
    mesh: object
    lu: tuple
    matrix: np.ndarray
    eta: complex
    rcond: float
    assemble_seconds: float
    factor_seconds: float

    def solve(self, problem=None):
        """Density for ``problem`` (same geometry, bc and k) or the stored one."""
        problem = problem or self.problem
        t0 = time.perf_counter()
        b = boundary_data(problem, self.mesh)
        root = np.sqrt(self.mesh.weights)
        bw = b * root
        sig_t = linalg.lu_solve(self.lu, bw)
        resid = float(np.linalg.norm(self.matrix @ sig_t - bw) / max(np.linalg.norm(bw), 1e-300))
        sigma = unweight(sig_t, self.mesh.weights)
        info = {
            "n_nodes": self.mesh.n_nodes,
            "n_panels": self.mesh.n_panels,
            "residual": resid,
            "rcond": self.rcond,
            "assemble_seconds": self.assemble_seconds,
            "factor_seconds": self.factor_seconds,
            "solve_seconds": time.perf_counter() - t0,
        }
        if resid > 1e-12:
            logger.warning("relative residual %.2e exceeds 1e-12", resid)
        return Density(self.mesh, sigma, problem.formulation, problem.k, self.eta, info)


def factorize(problem, mesh=None, jobs=1):
    """Assemble, l2-weight and LU-factor the system of ``problem``.

    Raises
    ------
    InvalidArgumentError
        If the mesh exceeds the node budget.
    NearResonanceError
        If the reciprocal condition estimate is below ``RCOND_FLOOR``.
    """
    mesh = mesh or build_mesh(problem)
    if mesh.n_nodes > problem.node_budget:
        raise InvalidArgumentError(
            f"mesh has {mesh.n_nodes} nodes, above the budget of {problem.node_budget} "
            f"(dense memory ~{16 * mesh.n_nodes ** 2 / 1e9:.1f} GB)"
        )
    t0 = time.perf_counter()
    nm = assemble(mesh, problem.formulation, problem.k, problem.alpha, problem.beta, jobs=jobs)
    t1 = time.perf_counter()
    weighted, _ = l2_weight(nm, np.zeros(mesh.n_nodes), mesh.weights)
    mat = weighted.matrix
    lu = linalg.lu_factor(mat, check_finite=True)
    anorm = np.linalg.norm(mat, 1)
    rcond = float(linalg.lapack.zgecon(lu[0], anorm, norm="1")[0])
    t2 = time.perf_counter()
    if not rcond > RCOND_FLOOR:
        raise NearResonanceError(problem.k, rcond)
    logger.info("factored %d x %d system, rcond %.2e", mesh.n_nodes, mesh.n_nodes, rcond)
    return Factorization(problem, mesh, lu, mat, nm.eta, rcond, t1 - t0, t2 - t1)


def solve(problem, mesh=None, jobs=1):
    """Solve ``problem`` by dense LU on the l2-weighted Nystrom system.

    The returned density's ``info`` holds the node count, the relative
    residual ``||A s - b|| / ||b||`` of the weighted system, the reciprocal
    condition estimate and timings.
    """
    return factorize(problem, mesh, jobs).solve()


def _exterior_circle(mesh, radius, centre):
    span = np.hypot(*(mesh.nodes - centre).T).max()
    return radius > span + 2 * mesh.panel_lengths.max()


def verify_known_solution(problem, radius=None, m=100, mesh=None, jobs=1):
    """Max relative error of the computed exterior field for point-source data.

    The circle of test points is centred on the area centroid; its default
    radius is twice the largest centroid-to-boundary distance.
    """
    from .fields import eval_field

    if not isinstance(problem.incidence, PointSource):
        raise InvalidArgumentError("verification needs point-source data")
    mesh = mesh or build_mesh(problem)
    if not panels._point_in_polygon(problem.incidence.x0, mesh.nodes):
        raise InvalidArgumentError(f"point source {problem.incidence.x0} is not inside the boundary")
    centre = panels.interior_point(mesh)
    if radius is None:
        radius = 2 * np.hypot(*(mesh.nodes - centre).T).max() + 2 * mesh.panel_lengths.max()
    if not _exterior_circle(mesh, radius, centre):
        raise InvalidArgumentError(f"test circle of radius {radius} is not clear of the boundary")
    dens = solve(problem, mesh, jobs)
    th = 2 * math.pi * np.arange(m) / m
    pts = centre + radius * np.column_stack([np.cos(th), np.sin(th)])
    u = eval_field(dens, pts)
    exact, _ = point_source_field(problem.incidence.x0, problem.k, pts)
    return float(np.abs(u - exact).max() / np.abs(exact).max())


def metadata(problem, density, extra=None):
    """JSON-ready summary of a solve."""
    out = {"problem": problem.to_dict(), **density.info}
    if extra:
        out.update(extra)
    return out
