"""Trace-driven simulation of vertical memory autoscaling for HPC containers."""

from vscale.errors import (
    ConfigError,
    InsufficientData,
    ParseError,
    PortError,
    SimulationError,
    ValidationError,
)
from vscale.trace import MemorySample, Trace, load_trace, resample, peak, duration

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InsufficientData",
    "MemorySample",
    "ParseError",
    "PortError",
    "SimulationError",
    "Trace",
    "ValidationError",
    "duration",
    "load_trace",
    "peak",
    "resample",
]
