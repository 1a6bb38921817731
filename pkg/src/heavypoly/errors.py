"""Exceptions shared across modules; the CLI maps them to exit codes."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class ContractViolation(AssertionError):
    """A numerical invariant failed at run time (CLI exit code 3)."""
