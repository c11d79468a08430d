"""Exception types shared across the package.

Exit-code mapping for the CLI: ConfigError -> 2, NumericalError -> 3,
acceptance failures -> 4.
"""


class SabiError(Exception):
    """Base class for package errors."""


class ConstraintError(SabiError):
    """A field violates a structural constraint (divergence, mean mode, ...)."""


class ConfigError(SabiError):
    """Invalid or unparseable run configuration."""


class NumericalError(SabiError):
    """Numerical failure during integration (NaN, CFL breach, floor hit)."""
