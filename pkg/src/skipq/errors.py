"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for invalid layer chains, run configs, or config files."""


class CheckpointError(ValueError):
    """Raised for unreadable, corrupt, or incompatible checkpoints."""
