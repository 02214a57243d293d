"""Exception types raised by validation and construction routines."""


class ValidationError(ValueError):
    """An input violates one of the documented invariants.

    ``index`` identifies the offending element (projector position, basis
    position, or similar) when that is meaningful.
    """

    def __init__(self, message: str, index=None):
        super().__init__(message)
        self.index = index


class NotHermitian(ValidationError):
    pass


class NotIdempotent(ValidationError):
    pass


class NotRankOne(ValidationError):
    pass


class NotComplete(ValidationError):
    """The projectors of a candidate basis do not resolve the identity."""


class DimensionMismatch(ValidationError):
    pass


class DimensionTooSmall(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class NotAProjector(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class MissingRecord(ValidationError):
    """A required measurement record is absent from the provided collection."""


class LatticeLeavesPsdCone(ValidationError):
    """The requested secret lattice exits the positive-semidefinite cone."""


class ConstructionFailed(RuntimeError):
    """A randomized or search-based construction exhausted its budget.

    The message carries the diagnostics gathered before giving up.
    """
