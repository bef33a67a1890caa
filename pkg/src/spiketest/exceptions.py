"""Exception hierarchy.

Everything raised on purpose by this package derives from
:class:`SpikeTestError`. Errors caused by invalid inputs or by a
configuration that is outside the domain of the asymptotic theory also
derive from :class:`ValueError`, numerical failures from
:class:`RuntimeError`.
"""


class SpikeTestError(Exception):
    """Base class for all package errors."""

    code = "error"


class DomainError(SpikeTestError, ValueError):
    """Input lies outside the domain where a quantity is defined."""

    code = "domain"


class SeparationError(DomainError):
    """A spike sits inside the bulk or too close to another eigenvalue."""

    code = "separation"


class NoSolutionError(DomainError):
    """An inverse problem (e.g. inverting the spike map) has no solution."""

    code = "no_solution"


class ConfigurationError(DomainError):
    """Inconsistent parameters, e.g. a non-positive asymptotic variance."""

    code = "configuration"


class DegenerateColumnError(DomainError):
    """A constant column cannot be standardized."""

    code = "degenerate_column"


class CSVParseError(SpikeTestError, ValueError):
    """A CSV cell could not be parsed as a float.

    ``row`` and ``column`` are 1-based positions in the file (the header
    row, when present, is row 1).
    """

    code = "parse"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ConvergenceError(SpikeTestError, RuntimeError):
    """An iterative solver did not converge."""

    code = "convergence"


class IntegrationError(ConvergenceError):
    """Contour quadrature did not stabilise under refinement."""

    code = "integration"
