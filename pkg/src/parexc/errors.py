"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonConvergenceError(RuntimeError):
    """A quadrature or contour sum failed to reach its accuracy target."""


class SpecMismatchError(ValueError):
    """Two artifacts that must share problem parameters do not."""


class ResourceLimitError(RuntimeError):
    """A simulation request exceeds the configured work budget."""
