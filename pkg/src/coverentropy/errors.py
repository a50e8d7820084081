"""Shared exception types."""


class CapacityError(RuntimeError):
    """An exact computation was refused because a configured budget would be exceeded."""


class ConfigError(ValueError):
    """A configuration document is malformed; the message names the offending field."""
