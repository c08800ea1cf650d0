"""Exception types raised across the package."""


class AlmostLpError(Exception):
    """Base class for all package errors."""


class UnsupportedFamilyCombination(AlmostLpError):
    """No analytic rule covers the requested tail families."""


class ToleranceNotReached(AlmostLpError):
    """A tail bound could not be pushed below the requested tolerance."""


class InfiniteMeasureSet(AlmostLpError):
    pass


class BruteForceTooLarge(AlmostLpError):
    pass


class MissingLimit(AlmostLpError):
    """A checker needs a candidate limit but the sequence has none."""


class DominationViolated(AlmostLpError):
    pass


class ImplicationViolation(AlmostLpError):
    def __init__(self, upstream, downstream, traces=None):
        super().__init__(f"{upstream} holds but {downstream} fails")
        self.upstream = upstream
        self.downstream = downstream
        self.traces = traces or {}


class NotMember(AlmostLpError):
    pass


class GridTooCoarse(AlmostLpError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UnknownEntry(AlmostLpError):
    pass


class ParamOutOfDomain(AlmostLpError):
    pass


class ParseError(AlmostLpError):
    pass
