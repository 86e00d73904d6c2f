class SignalMinerError(Exception):
    """Base class for errors raised on bad input data or configuration."""


class DataError(SignalMinerError):
    """An input file violates its format or invariants."""


class ConfigError(SignalMinerError):
    """Invalid configuration (universe, lexicon, run settings)."""
