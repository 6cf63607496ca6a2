"""Exception hierarchy shared by all vortexao modules."""


class VortexAOError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(VortexAOError):
    """Invalid configuration: bad grid, clipped beam, missing metadata."""


class GridMismatchError(VortexAOError):
    """Operands sampled on incompatible grids or array shapes."""


class DomainError(VortexAOError):
    """Numeric argument outside the valid domain of an operation."""


class DegenerateInputError(VortexAOError):
    """Input carries no usable information (constant image, zero field)."""


class StaleTapeError(VortexAOError):
    """Backward pass invoked with a tape recorded before a parameter update."""


class TrainingDivergenceError(VortexAOError):
    """Non-finite gradients encountered during optimization."""


class CorruptSampleError(VortexAOError):
    """Stored sample bytes do not match the manifest hash."""


class PgmParseError(VortexAOError):
    """Malformed portable graymap file; message carries the byte offset."""


class CheckpointError(VortexAOError):
    """Unreadable, truncated or schema-incompatible checkpoint file."""
