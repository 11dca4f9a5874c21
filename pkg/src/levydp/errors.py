"""Exception hierarchy shared by the library and the CLI."""


class LevyDPError(Exception):
    """Base class for all package errors."""


class DomainError(LevyDPError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoincareConditionError(DomainError):
    """The well-conditioning requirement of the SGD constant tracker fails.

    ``value`` holds the evaluated left-hand side ``(lambda/M) * (1 + alpha/d)``.
    """

    def __init__(self, value: float):
        self.value = value
        super().__init__(
            f"condition (lambda/M)(1 + alpha/d) > 1 violated: value = {value:.6g}"
        )


class UnsupportedFamilyError(LevyDPError, ValueError):
    """No certified sensitivity bound exists for the requested loss/region."""


class DegenerateSupportError(LevyDPError, ValueError):
    """The reference histogram misses mass carried by the other sample set."""

    def __init__(self, mass: float, tol: float):
        self.mass = mass
        self.tol = tol
        super().__init__(
            f"p carries mass {mass:.3g} on bins where q is empty (tolerance {tol:.3g})"
        )


class BudgetExceeded(LevyDPError, RuntimeError):
    """A quadrature or Monte-Carlo budget cannot meet the requested tolerance."""


class ConfigError(LevyDPError, ValueError):
    """Invalid run configuration (CLI exit code 2)."""
