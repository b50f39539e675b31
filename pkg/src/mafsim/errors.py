"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class ConstraintViolation(ValueError):
    """A caller broke one of the problem constraints (device count, monitoring window)."""


class UsageError(RuntimeError):
    """An object was used outside of its lifecycle (e.g. stepping a finished episode)."""


class NonFiniteError(FloatingPointError):
    """A numerical update produced or received NaN/inf values."""


class CheckpointError(RuntimeError):
    """A checkpoint file is corrupt, from another version, or has the wrong shape."""
