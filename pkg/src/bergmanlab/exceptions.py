"""Exception hierarchy shared by all bergmanlab modules."""


class BergmanLabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BergmanLabError, ValueError):
    """A point lies outside the domain, or a domain/grid is malformed."""


class GridError(DomainError):
    """A grid specification produces no admissible points."""


class CatalogError(BergmanLabError, KeyError):
    """Unknown catalog weight name or bad catalog parameters."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ExcludedMonomialError(BergmanLabError, ValueError):
    """A monomial with infinite weighted norm was requested."""


class QuadratureError(BergmanLabError, ArithmeticError):
    """Quadrature failed to reach the requested relative tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConditioningError(BergmanLabError, ArithmeticError):
    """The Gram matrix is numerically indefinite beyond tolerance."""

    def __init__(self, message, pivot=None, value=None):
        super().__init__(message)
        self.pivot = pivot
        self.value = value


class IterationError(BergmanLabError, RuntimeError):
    """A fixpoint iteration did not converge."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class ContractError(BergmanLabError, ValueError):
    """An operation was called outside the contract it is defined for."""


class ConfigError(BergmanLabError, ValueError):
    """Malformed experiment configuration, with line/key diagnostics when known."""

    def __init__(self, message, line=None, key=None, source=None):
        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key
        self.source = source
