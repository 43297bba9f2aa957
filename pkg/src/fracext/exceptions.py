"""Exception hierarchy shared by the solver modules and the CLI."""


class FracExtError(Exception):
    """Base class for all errors raised by fracext."""


class DomainError(FracExtError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class SingularPointError(DomainError):
    """A quantity was requested at a point where it is singular."""


class ConfigError(FracExtError, ValueError):
    """Invalid mesh, truncation or study configuration."""


class AssemblyError(FracExtError):
    """Coefficient data violates ellipticity on some cell."""


class SolverError(FracExtError):
    """A linear or eigen solve failed."""
