"""Corner rounding by convolution and Helmholtz scattering from the rounded polygons.

Modules
-------
geometry
    Polygons, smoothing kernels and convolutional corner rounding.
specfun
    Hankel and Bessel functions of orders 0 and 1 for complex arguments.
panels
    Adaptive Gauss-Legendre panel meshes and corner-refined reference meshes.
layerpot
    Layer-potential kernels, product quadrature and Nystrom assembly.
solver
    Exterior Dirichlet and Neumann solves with l2 weighting.
fields
    Scattered fields, cross sections, comparisons and order fits.
diffeo
    Harmonic extensions of boundary maps onto the unit disk.
estimators
    scikit-learn style wrappers around the above.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CornerwaveError,
    DegenerateGeometryError,
    InfeasibleToleranceError,
    InvalidArgumentError,
    NearBoundaryError,
    NearResonanceError,
    SingularityError,
)
from .geometry import Polygon, SmoothingKernel, round_polygon  # noqa: E402

__all__ = [
    "__version__",
    "CornerwaveError",
    "DegenerateGeometryError",
    "InfeasibleToleranceError",
    "InvalidArgumentError",
    "NearBoundaryError",
    "NearResonanceError",
    "SingularityError",
    "Polygon",
    "SmoothingKernel",
    "round_polygon",
]
