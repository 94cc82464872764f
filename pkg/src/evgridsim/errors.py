"""Exception hierarchy. The CLI maps each class to an exit code."""


class EvGridSimError(Exception):
    exit_code = 1


class ConfigError(EvGridSimError):
    """Invalid or incomplete scenario configuration."""

    exit_code = 2


class DataError(EvGridSimError):
    """Input data that is malformed or does not cover the horizon."""

    exit_code = 3


class InvariantError(EvGridSimError):
    """An internal invariant was violated during a run."""

    exit_code = 4
