"""Exception hierarchy shared by the simulator, metrics and harness."""


class HotAdcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(HotAdcError, ValueError):
    """Invalid or inconsistent configuration (bad ranges, unknown keys)."""


class InputError(HotAdcError, ValueError):
    """Input data that cannot be processed (too short, malformed rows)."""


class NoSignalToneError(InputError):
    """No identifiable test tone in the analysed spectrum."""


class SimulationError(HotAdcError, RuntimeError):
    """The modulator state became non-finite; the run is corrupted."""
