"""Exceptions raised by the workbench.

Every exception carries the process exit code the command line front end uses
when it escapes a subcommand.
"""


class WorkbenchError(Exception):
    exit_code = 1


class UsageError(WorkbenchError):
    exit_code = 2


class ConfigError(WorkbenchError, ValueError):
    exit_code = 2


class SizeMismatchError(WorkbenchError, ValueError):
    exit_code = 2


class ParameterError(WorkbenchError, ValueError):
    exit_code = 2


class InvalidSyndromeError(WorkbenchError, ValueError):
    exit_code = 2


class CapacityError(WorkbenchError):
    """The requested lattice is too large for the chosen decoder."""

    exit_code = 3


class NumericalError(WorkbenchError):
    exit_code = 4


class FitError(NumericalError):
    pass


class DegenerateFitWarning(UserWarning):
    """The accuracy curves never cross, so the reported threshold is arbitrary."""
