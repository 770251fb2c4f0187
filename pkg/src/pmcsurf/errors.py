"""Exception types shared across the package."""


class DomainError(ValueError):
    """A geometric input lies outside the domain of the operation."""


class NotSpacelikeError(DomainError):
    """A graph or gradient violates the spacelike bound |Du| < 1."""


class OutOfDomainError(DomainError):
    """A requested point falls outside a sampled field's coverage."""


class UsageError(ValueError):
    """Malformed arguments or configuration."""


class BracketError(RuntimeError):
    """A root bracket could not be established."""


class ConvergenceError(RuntimeError):
    """An iterative method failed to reach its tolerance."""
