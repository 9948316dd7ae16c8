"""Exception hierarchy. The CLI maps each class to an exit code."""


class DensecapError(Exception):
    exit_code = 1


class ValidationError(DensecapError, ValueError):
    """A record or argument violates a data invariant."""

    exit_code = 1


class PreconditionError(ValidationError):
    """Input ordering or shape does not meet an operation's precondition."""


class ConfigError(DensecapError, ValueError):
    exit_code = 3
