"""Exception hierarchy shared by all gridbatt modules."""


class GridBattError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(GridBattError, ValueError):
    """Invalid parameter, base value, or dimension."""


class SchemaError(GridBattError, ValueError):
    """A tabular input is missing columns, rows, or holds invalid values."""


class TopologyError(GridBattError, ValueError):
    """The line graph is not a tree rooted at the slack bus."""

    def __init__(self, message, bus_id=None):
        super().__init__(message)
        self.bus_id = bus_id


class InfeasibleFlowError(GridBattError, RuntimeError):
    """Voltage collapse during a load-flow iteration."""

    def __init__(self, message, min_voltage=None):
        super().__init__(message)
        self.min_voltage = min_voltage


class BoundsViolation(GridBattError):
    """A battery energy update left the interval [0, e_max].

    ``state`` holds the state clipped back into bounds and ``overshoot`` the
    magnitude (kWh) by which the bound was crossed.
    """

    def __init__(self, state, overshoot):
        super().__init__(f"battery energy bound crossed by {overshoot:.6g} kWh")
        self.state = state
        self.overshoot = overshoot
