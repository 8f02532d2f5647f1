"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`BoundaryLabError`; the ones signalling bad caller input also derive
from :class:`ValueError` so that generic handlers keep working.
"""


class BoundaryLabError(Exception):
    pass


class DomainError(BoundaryLabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularityError(BoundaryLabError, ArithmeticError):
    """A Möbius denominator vanished; the map is corrupted."""


class DegenerateInputError(BoundaryLabError, ValueError):
    pass


class OrientationError(BoundaryLabError, ValueError):
    """Three-point data would produce an orientation-reversing map."""


class ConstructionError(BoundaryLabError):
    """A geometric construction failed its own consistency checks."""


class DiagonalError(BoundaryLabError, ValueError):
    """A pair (x, y) lies on the diagonal of the torus."""


class PreconditionError(BoundaryLabError, ValueError):
    pass


class SingularDomainError(BoundaryLabError, ValueError):
    """A rectangle meets the diagonal, where the measure density blows up."""


class DegenerateConfigurationError(BoundaryLabError, ValueError):
    pass


class PoleError(BoundaryLabError, ValueError):
    pass
