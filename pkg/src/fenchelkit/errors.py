"""Exception types shared across the toolkit."""


class FenchelkitError(Exception):
    """Base class for all toolkit errors."""


class ImproperFunctionError(FenchelkitError):
    """Raised when an operation needs a proper function (finite somewhere)."""


class NoAffineMinorantError(FenchelkitError):
    """Raised by biconjugation when the conjugate is identically +inf."""


class GridMismatchError(FenchelkitError):
    """Raised when two grid functions have incompatible grids."""


class QualificationError(FenchelkitError):
    """Raised when a sum/composition rule's qualification condition fails."""


class SlaterError(FenchelkitError):
    """Raised when no strictly feasible point can be certified."""


class PivotLimitError(FenchelkitError):
    """Raised when the simplex pivot budget is exhausted."""


class MarginalMismatchError(FenchelkitError):
    """Raised when transport marginals have unequal total mass."""


class NotSemiDistanceError(FenchelkitError):
    """Raised when a cost matrix fails the semi-distance axioms."""


class DomainMaskError(FenchelkitError):
    """Raised when a point falls outside the geodesic domain mask."""


class PSolveError(FenchelkitError):
    """Raised when the p-Laplace Newton solver fails to converge."""


class ProblemFileError(FenchelkitError):
    """Raised for malformed CLI problem files (maps to exit code 2)."""
