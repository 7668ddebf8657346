"""scikit-learn style front ends.

``CornerRounder`` fits a rounded curve to polygon vertices and transforms
normalized arclength into boundary points.  ``HelmholtzScatterer`` fits a
scattering solution to a polygon and predicts the scattered field at exterior
points.  Both keep constructor arguments untouched, so ``get_params`` and
``clone`` behave as usual.
"""

import logging
import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import fields, solver
from .errors import InvalidArgumentError
from .geometry import Polygon, SmoothingKernel, round_polygon

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------
def check_vertices(X):
    """Validate an ``(n, 2)`` vertex array and return it as a :class:`Polygon`."""
    try:
        v = check_array(X, dtype=float, ensure_min_samples=3)
    except ValueError as exc:
        raise InvalidArgumentError(f"invalid vertex array: {exc}") from exc
    if v.shape[1] != 2:
        raise InvalidArgumentError(f"vertices must have 2 columns, got {v.shape[1]}")
    return Polygon(v)


def check_points(X):
    """Validate an ``(m, 2)`` array of planar points."""
    try:
        p = check_array(X, dtype=float)
    except ValueError as exc:
        raise InvalidArgumentError(f"invalid point array: {exc}") from exc
    if p.shape[1] != 2:
        raise InvalidArgumentError(f"points must have 2 columns, got {p.shape[1]}")
    return p


def check_kernel(kernel):
    """Accept a :class:`SmoothingKernel` or a spec string such as ``"poly:8"``."""
    return kernel if isinstance(kernel, SmoothingKernel) else SmoothingKernel.parse(kernel)


def check_fraction(X):
    """Normalized arclength values as a flat array in [0, 1)."""
    t = check_array(np.reshape(np.asarray(X, dtype=float), (-1, 1)), dtype=float).ravel()
    if np.any((t < 0) | (t >= 1)):
        raise InvalidArgumentError("arclength fractions must lie in [0, 1)")
    return t


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------
class CornerRounder(TransformerMixin, BaseEstimator):
    """Round the corners of a polygon by kernel convolution.

    Parameters
    ----------
    h : float
        Length of edge replaced on each side of every vertex.
    kernel : str or SmoothingKernel
        ``"poly:k"`` or ``"gauss"``.

    Attributes
    ----------
    polygon_ : Polygon
    curve_ : PiecewiseCurve
    length_ : float
        Total arclength of the rounded curve.
    """

    def __init__(self, h=0.1, kernel="poly:8"):
        self.h = h
        self.kernel = kernel

    def fit(self, X, y=None):
        """Round the polygon with vertex rows ``X``."""
        self.polygon_ = check_vertices(X)
        self.curve_ = round_polygon(self.polygon_, float(self.h), check_kernel(self.kernel))
        self.length_ = self.curve_.total_length
        return self

    def transform(self, X):
        """Boundary points at normalized arclength ``X`` (values in [0, 1))."""
        check_is_fitted(self, "curve_")
        t = check_fraction(X)
        return self.curve_.evaluate_at_arclengths(t * self.length_)[0]

    def fit_transform(self, X, y=None, n_samples=1000):
        """Fit on vertices ``X`` and return ``n_samples`` equispaced boundary points."""
        return self.fit(X).transform(np.arange(n_samples) / n_samples)


class HelmholtzScatterer(BaseEstimator):
    """Scattering of a plane wave by a rounded (or exact) polygon.

    Parameters
    ----------
    k_re, k_im : float
        Wavenumber ``k = k_re + i k_im``.
    bc : {"dirichlet", "neumann"}
    phi : float
        Incidence angle of the plane wave.
    h : float or None
        Rounding length. ``None`` solves on the exact polygon with a
        corner-refined mesh.
    kernel : str or SmoothingKernel
    tol : float
        Panel resolution tolerance.
    alpha, beta : float
        Combined-field coupling ``eta = alpha k + beta`` (Dirichlet only).
    jobs : int
        Worker threads for assembly.
    node_budget : int
        Refuse meshes with more nodes than this.

    Attributes
    ----------
    problem_ : ScatteringProblem
    mesh_ : BoundaryMesh
    density_ : Density
    n_nodes_ : int
    """

    def __init__(self, k_re=10.0, k_im=0.0, bc="dirichlet", phi=0.0, h=0.1, kernel="poly:8",
                 tol=1e-10, alpha=1.2, beta=0.8, jobs=1, node_budget=solver.DEFAULT_NODE_BUDGET):
        self.k_re = k_re
        self.k_im = k_im
        self.bc = bc
        self.phi = phi
        self.h = h
        self.kernel = kernel
        self.tol = tol
        self.alpha = alpha
        self.beta = beta
        self.jobs = jobs
        self.node_budget = node_budget

    def _geometry(self, polygon):
        if self.h is None:
            return solver.GeometrySource.corner_reference(polygon)
        return solver.GeometrySource.smoothed(polygon, self.h, check_kernel(self.kernel))

    def fit(self, X, y=None):
        """Solve the scattering problem for the polygon with vertex rows ``X``."""
        polygon = check_vertices(X)
        self.problem_ = solver.ScatteringProblem(
            self._geometry(polygon), self.bc, complex(self.k_re, self.k_im), solver.PlaneWave(self.phi),
            tol=self.tol, alpha=self.alpha, beta=self.beta, node_budget=self.node_budget,
        )
        self.factorization_ = solver.factorize(self.problem_, jobs=self.jobs)
        self.mesh_ = self.factorization_.mesh
        self.density_ = self.factorization_.solve()
        self.n_nodes_ = self.mesh_.n_nodes
        logger.info("fitted %s problem on %d nodes", self.bc, self.n_nodes_)
        return self

    def predict(self, X):
        """Complex scattered field at exterior points ``X``."""
        check_is_fitted(self, "density_")
        return fields.eval_field(self.density_, check_points(X), self.jobs)

    def total_field(self, X):
        """Incident plus scattered field at ``X``."""
        pts = check_points(X)
        inc, _ = fields.plane_wave(self.problem_.incidence.phi, self.problem_.k, pts)
        return inc + self.predict(pts)

    def cross_section(self, kind="bi-static", radius=10.0, samples=fields.DEFAULT_SAMPLES):
        """Bi-static, mono-static or far-field section of the fitted problem."""
        check_is_fitted(self, "density_")
        if kind == "bi-static":
            return fields.cross_section_near(self.density_, radius, samples, jobs=self.jobs)
        if kind == "far-field":
            return fields.cross_section_far(self.density_, samples)
        if kind == "mono-static":
            return fields.cross_section_mono(self.problem_, radius, samples, mesh=self.mesh_, jobs=self.jobs)
        raise InvalidArgumentError(f"unknown cross-section kind {kind!r}")

    def verify(self, x0, radius=None, samples=100):
        """Known-solution error for a point source at interior point ``x0``."""
        check_is_fitted(self, "problem_")
        prob = self.problem_.with_incidence(solver.PointSource(tuple(x0)))
        return solver.verify_known_solution(prob, radius, samples, mesh=self.mesh_, jobs=self.jobs)

    @property
    def wavelength(self):
        return 2 * math.pi / self.k_re
