"""Exception hierarchy shared by all modules."""


class MatchIllumError(Exception):
    """Base class for every error raised by this package."""


class FormatError(MatchIllumError, ValueError):
    pass


class RangeError(MatchIllumError, ValueError):
    pass


class DomainError(MatchIllumError, ValueError):
    pass


class RankError(MatchIllumError, ValueError):
    """A least-squares system is rank deficient."""

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class DegenerateError(MatchIllumError, ValueError):
    pass


class ValidationError(MatchIllumError, ValueError):
    """Input data violate a documented invariant.

    ``problems`` lists every violation found, not just the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InfeasibleError(MatchIllumError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class NonConvergenceError(MatchIllumError):
    """Iteration cap hit; ``best`` holds the best iterate seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class OscillationError(NonConvergenceError):
    pass
