#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Exceptions raised by nti.ivreg.

Everything derives from :class:`IVError`, itself a :class:`ValueError`,
so callers that only care about "bad numbers in, no answer out" can
catch that.
"""

__docformat__ = "restructuredtext en"


class IVError(ValueError):
    """
    Base class for all data and numeric errors.
    """


class ReplicationFailure(IVError):
    """
    Mixin marking errors that a Monte-Carlo replication may raise
    without aborting the whole run. The engine counts these.
    """


class DimensionMismatch(IVError):
    """Array shapes do not conform."""


class RankDeficientInstruments(IVError):
    """
    The instrument matrix does not have full column rank.

    The *effective_rank* attribute gives the numerical rank found.
    """

    def __init__(self, msg, effective_rank=None):
        super().__init__(msg)
        self.effective_rank = effective_rank


class ExogenousMismatch(IVError):
    """The included exogenous columns of X and Z differ."""


class RankDeficientDesign(ReplicationFailure):
    """The regressor (or an auxiliary normal) matrix is singular."""


class WeakRankFailure(ReplicationFailure):
    """
    ``X'P_Z X`` is numerically singular: the two-stage least squares
    estimate does not exist for this sample.
    """


class LeverageOne(ReplicationFailure):
    """
    Some observation has instrument leverage numerically equal to one;
    its leave-one-out first stage is not identified.
    """

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class SingularGram(ReplicationFailure):
    """The LIML denominator matrix ``Y*'M_Z Y*`` is not positive definite."""


class MultipleEndogenous(IVError):
    """The operation supports a single endogenous regressor only."""


class NoExcludedInstruments(IVError):
    """There is no excluded instrument."""


class NonpositiveVariance(IVError):
    """A variance argument is zero or negative."""


class DegenerateFirstStage(IVError):
    """``pi'Z'Z pi`` is zero."""


class DegenerateResidual(IVError):
    """The annihilated residual is numerically zero."""


class InvalidGrid(IVError):
    """A search grid is empty or malformed."""


class InvalidCovariance(IVError):
    """A covariance matrix is not symmetric positive semidefinite."""


class InvalidSweepValue(IVError):
    """A sweep axis value is outside its valid range."""


class SchemaMismatch(IVError):
    """A declared column is missing from the input, or the schema is malformed."""


class ParseError(IVError):
    """
    A declared cell could not be parsed. *row* is the 1-based data row
    number (the header is row 0) and *column* the column name.
    """

    def __init__(self, row, column, value=None):
        super().__init__("Cannot parse %r in row %d, column %r" % (value, row, column))
        self.row = row
        self.column = column
        self.value = value


class SingleLevelCategorical(IVError):
    """A categorical column has fewer than two observed levels."""


class EmptyAfterFiltering(IVError):
    """No rows remain."""


class InvalidConfiguration(IVError):
    """
    A configuration object failed schema validation.

    *errors* is the list of ``(field_name, exception)`` pairs from
    :func:`zope.schema.getValidationErrors`.
    """

    def __init__(self, msg, errors=()):
        super().__init__(msg)
        self.errors = list(errors)
