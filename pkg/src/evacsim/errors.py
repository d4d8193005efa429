"""Exception types shared across the package."""


class EvacsimError(Exception):
    """Base class for all evacsim errors."""


class MapError(EvacsimError, ValueError):
    """Malformed map text or an invalid floor-plan query."""


class ConfigError(EvacsimError, ValueError):
    """Invalid simulation or sweep configuration."""
