"""Exception hierarchy shared by every subpackage.

Each error also derives from the closest built-in exception so code that
catches ``ValueError`` or ``IndexError`` keeps working.
"""


class VamError(Exception):
    """Base class for all errors raised by vam_gridworld."""


class ConfigError(VamError, ValueError):
    """Invalid configuration value, unknown key or bad flag combination."""


class DimensionError(VamError, ValueError):
    """Tensor shapes do not agree."""


class ContractError(VamError, ValueError):
    """A caller violated an operation's precondition."""


class TargetIndexError(VamError, IndexError):
    """A class index is outside the logits' range."""


class NumericError(VamError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class GenerationError(VamError, RuntimeError):
    """World generation could not produce a solvable episode."""


class PlanningError(VamError, RuntimeError):
    """The oracle planner could not reach a target or satisfy a precondition."""


class DataError(VamError, RuntimeError):
    """Dataset missing, inconsistent, or read by a consumer not allowed to."""


class TrainingError(VamError, RuntimeError):
    """Training diverged."""


class EvaluationError(VamError, RuntimeError):
    """Evaluation could not be carried out."""
