"""Exception types shared across the package."""

from __future__ import annotations


class WealthDynError(Exception):
    """Base class for all package errors."""


class ConfigError(WealthDynError, ValueError):
    """Malformed economy document: syntax, unknown or missing fields."""


class ConfigValidationError(ConfigError):
    """Well-formed document that violates an economy invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class RateConflictError(WealthDynError, ValueError):
    """Both directions of a pair were given inconsistent interaction rates."""


class NegativeWealthError(WealthDynError, ArithmeticError):
    def __init__(self, timestep, wealth=None):
        self.timestep = timestep
        self.wealth = wealth
        super().__init__(f"negative wealth at timestep {timestep}; step or rates too aggressive")


class InfeasibleDesiredError(WealthDynError, ValueError):
    """Desired distribution does not sum to the maximum supply."""


class NoConvergenceError(WealthDynError):
    """The inverse solver could not reach the tolerance; ``result`` holds the best found."""

    def __init__(self, result, tolerance):
        self.result = result
        self.tolerance = tolerance
        super().__init__(
            f"best residual {result.residual_norm:.6f} exceeds tolerance "
            f"{tolerance} * max_supply after {result.starts_used} starts"
        )


class ZeroWealthProductError(WealthDynError, ZeroDivisionError):
    pass


class ZeroDemandError(WealthDynError, ValueError):
    pass
