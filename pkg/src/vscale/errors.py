class VscaleError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(VscaleError):
    pass


class ValidationError(VscaleError, ValueError):
    pass


class InsufficientData(VscaleError, ValueError):
    pass


class ConfigError(VscaleError):
    pass


class SimulationError(VscaleError):
    """A replay could not complete (e.g. OOM with no restart semantics).

    The partial ``ReplayResult`` is attached as ``result`` when available.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class PortError(VscaleError):
    pass
