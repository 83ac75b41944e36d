"""Exception types shared across the package."""


class WavegaitError(Exception):
    """Base class for all package errors."""


class ConfigurationError(WavegaitError):
    """Invalid parameter value, shape mismatch, or malformed config file."""


class TerrainBoundsError(WavegaitError):
    """A query or a foot left the height field; the episode is over."""


class DegenerateSupportError(WavegaitError):
    """No ideal-stance foot available to settle the body on."""


class ContractViolationError(WavegaitError):
    """An operation was called outside its stated precondition."""


class StatisticsError(WavegaitError):
    """Not enough samples for the requested statistic."""


class CheckpointError(WavegaitError):
    """Checkpoint file is missing, malformed, or has the wrong version."""
