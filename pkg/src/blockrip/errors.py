"""Exception types shared across the package.

Plain ValueError is used for bad arguments and dimension mismatches; the
classes here mark conditions callers are expected to branch on.
"""


class CapacityError(RuntimeError):
    """An enumeration guard was exceeded (too many block supports)."""


class ConfigurationError(ValueError):
    """An experiment or request configuration is invalid."""


class InfeasibleProblemError(RuntimeError):
    """The residual-ball constraint cannot be met by any signal."""


class HypothesisNotMetError(ValueError):
    """Input does not satisfy the hypothesis of the inequality being probed."""


class CounterexampleInvalidError(RuntimeError):
    """A sharpness instance failed a verification that must always pass."""
