"""Exception hierarchy shared by all asl modules.

Everything raised on purpose derives from GeomError so callers (and the CLI)
can tell validation problems from solver failures with two tuple checks.
"""


class GeomError(Exception):
    """Base class for all errors raised by this package."""


# -- input / validation errors ------------------------------------------------

class ChartMismatch(GeomError):
    """No single affine chart bounds both domains."""


class NotProperlyConvex(GeomError):
    """Boundary rays do not bound a properly convex region in any chart."""


class DegenerateDomain(GeomError):
    """Boundary samples are (nearly) collinear; the dual is unstable."""


class NotPositiveSpectrum(GeomError):
    """Matrix has a complex or non-positive eigenvalue."""


class Overflow(GeomError):
    """Parameter would overflow the exponential map."""


class TooCoarse(GeomError):
    """Grid too coarse for the requested derived field."""


class GradientFold(GeomError):
    """Numerical gradients are non-monotone; convexity lost."""


class PathExits(GeomError):
    """Integration path leaves the interior node set."""


class ZeroResidue(GeomError):
    """Residue is zero where a nonzero residue is required."""


class BadWindow(GeomError):
    """Flat window is empty or exits the collar."""


class ZeroOnBoundary(GeomError):
    """Cubic differential vanishes on the truncation circle."""


class DataOffGrid(GeomError):
    """Path sample falls outside the gridded coefficient data."""


class NotEquivariant(GeomError):
    """Field data is not periodic under the stated deck transformation."""


# -- solver failures ----------------------------------------------------------

class NewtonDiverged(GeomError):
    """Damped Newton failed to reduce the residual."""


class LostConvexity(GeomError):
    """Discrete Hessian indefinite beyond tolerance."""


class BracketViolated(GeomError):
    """Solution exits the sub/super-solution bracket."""


class NotConvex(GeomError):
    """Developed boundary rays do not bound a convex region."""


# Used by the CLI to map exceptions to exit codes.
VALIDATION_ERRORS = (
    ChartMismatch,
    NotProperlyConvex,
    DegenerateDomain,
    NotPositiveSpectrum,
    Overflow,
    TooCoarse,
    PathExits,
    ZeroResidue,
    BadWindow,
    ZeroOnBoundary,
    DataOffGrid,
    NotEquivariant,
)

SOLVER_ERRORS = (
    NewtonDiverged,
    LostConvexity,
    BracketViolated,
    GradientFold,
    NotConvex,
)
