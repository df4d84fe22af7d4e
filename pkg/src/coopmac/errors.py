"""Exception hierarchy. The CLI maps these to distinct exit codes."""


class CoopmacError(Exception):
    """Base class for all package errors."""


class ConfigError(CoopmacError):
    """Invalid scenario/configuration input (bad key, bad value, bad domain)."""


class NumericError(CoopmacError):
    """A numerical routine failed to meet its contract (non-convergence,
    negative probability beyond tolerance, near-singular correlation)."""


class ValidationError(CoopmacError):
    """A validation check (cmd_validate) failed."""
