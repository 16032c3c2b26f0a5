"""Custom exceptions for bveff."""


class BVError(Exception):
    """Base exception for all bveff errors."""

    exit_code = 1


class ValidationError(BVError):
    """An algebra, Lie algebra or induction datum violates its axioms."""

    exit_code = 2


class ParseError(ValidationError):
    """A spec file, fixture name or option value could not be parsed."""

    pass


class PreconditionError(BVError):
    """An operation was called on input outside its domain."""

    exit_code = 2


class CapExceededError(BVError):
    """Requested loop or leaf order exceeds the configured cap."""

    exit_code = 3


class ResidualTermError(BVError):
    """A computed series has terms outside the expected form."""

    pass


class PropertyFailure(BVError):
    """A verification suite found a failing property."""

    pass


class ConfigError(BVError):
    """Error related to configuration file operations."""

    exit_code = 2


class ReportError(BVError):
    """A report or export file could not be written."""

    pass
