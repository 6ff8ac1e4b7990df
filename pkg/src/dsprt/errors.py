"""Exception types raised by the toolkit."""


class DsprtError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DsprtError, ValueError):
    """Invalid or inconsistent configuration."""


class CalibrationError(DsprtError, RuntimeError):
    """A Monte Carlo calibration could not produce a usable answer."""


class KernelError(DsprtError, RuntimeError):
    """The simulation kernel was driven into an impossible state."""
