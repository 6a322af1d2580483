"""Exception types shared across the package."""


class DiracpairError(Exception):
    """Base class for package errors."""


class DomainError(DiracpairError):
    """Input outside the mathematical domain of an operation."""


class ConfigError(DiracpairError):
    """Malformed or invalid run configuration."""


class SingularMatchingError(DiracpairError):
    """Wave matching is degenerate (spinor denominator or momentum vanishes)."""


class InvariantViolation(DiracpairError):
    """A numerical invariant was violated during a run; the run must abort."""
