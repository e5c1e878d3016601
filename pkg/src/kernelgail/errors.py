"""Exception types shared across the package."""


class KernelGailError(Exception):
    """Base class for all package-specific errors."""


class NonErgodicChain(KernelGailError):
    """Power iteration failed to converge, or two starting distributions
    reached different fixed points."""


class DegenerateDecay(KernelGailError):
    """Mixing curve is already at the fixed point after one step."""


class ChainMismatch(KernelGailError):
    """A chain was built from a different policy than the one supplied."""


class SingularSystem(KernelGailError):
    """The augmented bias-function system is rank deficient beyond the
    expected one-dimensional null space."""


class BallViolation(KernelGailError):
    """A reward parameter lies outside its admissible norm ball."""


class InfeasibleConstants(KernelGailError):
    """Step-size or batch-size formulas received constants that make a
    denominator nonpositive."""


class InsufficientHistory(KernelGailError):
    """An operation needs more past iterates than have been recorded."""


class TrajectoryTooShort(KernelGailError):
    """The trajectory cannot hold even one block pair of the required size."""

    def __init__(self, message: str, min_length: int | None = None):
        super().__init__(message)
        self.min_length = min_length


class MissingExpert(KernelGailError):
    """Demonstration generation needs an evaluation reward or an expert
    checkpoint, and neither was supplied."""


class ConfigError(KernelGailError):
    """A configuration file or flag failed validation; the message names
    the offending key."""
