"""Exception types shared across the simulator."""


class ConfigError(Exception):
    """Invalid configuration, scenario, or construction parameters (CLI exit code 1)."""


class SimulationError(Exception):
    """Runtime or training failure inside an episode (CLI exit code 2)."""
