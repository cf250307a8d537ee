class ConfigError(ValueError):
    """Malformed or inconsistent configuration (scenario, profile, plan)."""


class InfeasibleError(ValueError):
    """The requested speed leaves no window in which an attack can matter."""
