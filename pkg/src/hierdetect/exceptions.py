"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class EmptySetError(ValueError):
    """An operation that needs a nonempty set received an empty one."""


class LPError(RuntimeError):
    """The LP backend returned neither an optimum nor a clean infeasibility."""


class RegulatorError(ValueError):
    """The regulator equations have no solution within tolerance."""


class DestabilizingGainError(ValueError):
    """Closed-loop spectral radius is not below one."""


class ConfigError(ValueError):
    """Scenario file could not be parsed or failed schema validation."""


class AssumptionViolation(ValueError):
    """The model breaks one of the standing structural assumptions."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
