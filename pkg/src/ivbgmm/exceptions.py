"""Exception hierarchy.

Errors raised for bad input data derive from :class:`ValidationError`; errors
raised while evaluating a model derive from :class:`EstimationError`. The CLI
maps the two families to distinct exit codes.
"""

from __future__ import annotations


class IVBGMMError(Exception):
    """Base class for all package errors."""


class ValidationError(IVBGMMError, ValueError):
    """Input data or configuration is unusable."""


class NonFinite(ValidationError):
    pass


class RankDeficient(ValidationError):
    pass


class InvalidModel(ValidationError):
    """A model index violates the support of the model prior."""


class EstimationError(IVBGMMError, ArithmeticError):
    """A numerical step failed on otherwise valid input."""


class NotPositiveDefinite(EstimationError):
    pass


class SingularModel(EstimationError):
    pass


class SingularWeight(EstimationError):
    pass


class AllSingular(EstimationError):
    pass


class ZeroFirstStage(EstimationError):
    pass


class TooLarge(IVBGMMError, ValueError):
    pass


class MissingFit(IVBGMMError, KeyError):
    pass
