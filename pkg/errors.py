"""Exception types shared by the library and the CLI."""


class PolymartError(Exception):
    """Base class for all polymart failures."""


class DomainError(PolymartError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class CapExceeded(DomainError):
    """Brute-force enumeration would exceed the configured cap."""


class ConfigError(PolymartError, ValueError):
    """Malformed or invalid experiment configuration."""


class NumericalError(PolymartError, ArithmeticError):
    """A numerical routine failed: divergence, non-convergence, overflow."""
