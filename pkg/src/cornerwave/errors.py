"""Exception types raised by cornerwave."""


class CornerwaveError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(CornerwaveError, ValueError):
    """An argument violates a documented precondition."""


class SingularityError(CornerwaveError, ValueError):
    """A kernel or special function was evaluated at its singular point."""


class InfeasibleToleranceError(CornerwaveError, ValueError):
    """No parameter in the admissible range meets the requested tolerance."""


class DegenerateGeometryError(CornerwaveError, RuntimeError):
    """Adaptive refinement failed to resolve the geometry."""


class NearResonanceError(CornerwaveError, RuntimeError):
    """The discretized system is singular to working precision."""

    def __init__(self, k, rcond):
        self.k = k
        self.rcond = rcond
        super().__init__(
            f"system matrix is numerically singular at k={k!r} "
            f"(rcond={rcond:.2e}); choose a wavenumber away from interior eigenvalues"
        )


class NearBoundaryError(CornerwaveError, ValueError):
    """A field target lies too close to the boundary for plain quadrature."""

    def __init__(self, index, point, distance):
        self.index = index
        self.point = point
        self.distance = distance
        super().__init__(
            f"target #{index} at ({point[0]:.6g}, {point[1]:.6g}) is {distance:.3g} "
            "from the boundary; plain panel quadrature is not valid there"
        )
