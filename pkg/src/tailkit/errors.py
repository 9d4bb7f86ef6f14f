"""Semantic exception hierarchy.

Public functions raise these instead of bare ValueError so callers (and the
CLI exit-code mapping) can tell model/parameter problems apart from numeric
failures and config problems.
"""


class TailkitError(Exception):
    """Base error for the package."""


class InvalidParameterError(TailkitError, ValueError):
    """A model or operator parameter violates its contract."""


class EmptySampleError(InvalidParameterError):
    """Empirical tail requested from an empty sample list."""


class QuadratureError(TailkitError, ArithmeticError):
    """Estimated quadrature error above the acceptable relative tolerance."""


class UnsupportedSupportError(TailkitError):
    """Operator applied to a model whose support it cannot handle."""


class UnderflowBeforeWindowError(TailkitError):
    """Grid exhausted by tail underflow before the estimation window starts."""


class TransformDivergentError(TailkitError):
    """Exponential moment diverges at the requested tilt."""


class MissingBoundError(TailkitError):
    """Stopped-sum operation requires a bounded counting variable."""


class PreconditionNotDeclaredError(TailkitError):
    """A declared-precondition flag (e.g. a finite exponential tilt) is absent."""


class DegenerateInputError(TailkitError):
    """Input degenerate where the operator needs a non-degenerate one."""


class NoSamplerError(TailkitError):
    """Joint model has no sampler for the requested coupling."""


class InsufficientSamplesError(TailkitError):
    """Monte Carlo conditional cells have too few hits to be meaningful."""


class DimensionMismatchError(TailkitError):
    """Vector models of different dimensions combined."""


class MissingReferenceError(TailkitError):
    """Vector membership estimator needs a reference tail with certificates."""


class RegistryIncompleteError(TailkitError):
    """A required theorem id has no executable check. Build-breaking."""


class PipelineError(TailkitError):
    """CLI operator pipeline is malformed or type-mismatched."""


class ConfigError(TailkitError):
    """Run configuration or corpus file cannot be parsed."""
