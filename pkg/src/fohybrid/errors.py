"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`FOHybridError`.  The CLI maps the second-level classes onto
distinct exit codes (see ``EXIT_CODES``).
"""


class FOHybridError(Exception):
    """Base class for all package errors."""


# -- configuration / data -------------------------------------------------


class ConfigError(FOHybridError, ValueError):
    """Invalid configuration or option value."""


class DataError(FOHybridError, ValueError):
    """Problem with an input dataset."""


class SchemaError(DataError):
    pass


class ParseError(DataError):
    pass


class ValidationError(DataError):
    pass


class DegenerateFeatureError(DataError):
    pass


# -- physics ---------------------------------------------------------------


class SolverError(FOHybridError, RuntimeError):
    """The implicit flux equation could not be solved."""


class BracketError(SolverError):
    pass


class ConvergenceError(SolverError):
    pass


class CorrelationError(SolverError):
    """A property correlation produced a non-physical value."""


class DomainError(FOHybridError, ValueError):
    """Input outside the domain of a mathematical function."""


# -- GP --------------------------------------------------------------------


class ConditioningError(FOHybridError, RuntimeError):
    """Cholesky factorization failed even after jitter escalation."""


class OptimizationError(ConditioningError):
    pass


# -- model files -------------------------------------------------------------


class ModelFileError(FOHybridError, IOError):
    pass


class ChecksumError(ModelFileError):
    pass


class IncompatibleVersionError(ModelFileError):
    pass


# -- uncertainty / metrics -------------------------------------------------


class JacobianError(SolverError):
    pass


class SamplingError(FOHybridError, RuntimeError):
    pass


class CovarianceError(ValidationError):
    pass


class MetricUndefinedError(FOHybridError, ValueError):
    """A metric is undefined for the given data.

    ``report`` carries the metrics that *could* be computed, with the
    undefined ones set to NaN.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UndefinedShareError(FOHybridError, ValueError):
    pass


EXIT_CODES = (
    # most specific first
    (ConfigError, 2),
    (DataError, 3),
    (ConditioningError, 5),
    (SolverError, 4),
    (ModelFileError, 6),
    (FOHybridError, 1),
)


def exit_code_for(exc):
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1
