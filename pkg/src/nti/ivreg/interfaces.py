#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Interfaces for nti.ivreg.

Array-valued attributes are declared as plain attributes; scalar
configuration is declared with :mod:`zope.schema` fields so that it
can be validated with :func:`validate_schema`.
"""

__docformat__ = "restructuredtext en"

# pylint:disable=inherit-non-class,no-self-argument,no-method-argument

from zope import schema
from zope.interface import Attribute
from zope.interface import Interface
from zope.interface import Invalid
from zope.interface import invariant

from nti.ivreg.errors import InvalidConfiguration

#: Estimator tags.
OLS = 'OLS'
TSLS = 'TSLS'
LIML = 'LIML'
JIVE = 'JIVE'
#: A k-class fit at a fixed kappa other than 0 or 1.
KCLASS = 'KCLASS'
ESTIMATOR_TAGS = (OLS, TSLS, LIML, JIVE, KCLASS)

#: Weak-instrument verdicts.
STRONG = 'strong'
WEAK = 'weak'
INDETERMINATE = 'indeterminate'


def validate_schema(iface, obj):
    """
    Validate *obj* against the schema fields and invariants of *iface*.

    :raises InvalidConfiguration: listing every failing field.
    """
    errors = schema.getValidationErrors(iface, obj)
    if errors:
        raise InvalidConfiguration(
            "Invalid %s: %s" % (iface.__name__,
                                ', '.join('%s (%s)' % (name or 'invariant', ex)
                                          for name, ex in errors)),
            errors)
    return obj


class IIVDataset(Interface):
    """
    Outcome, regressors and instruments of a linear IV model.

    The first ``n_exog`` columns of ``x`` and ``z`` are identical
    (included exogenous regressors, intercept included).
    """

    y = Attribute("Outcome vector, length N")
    x = Attribute("Regressor matrix, N x L, exogenous columns first")
    z = Attribute("Instrument matrix, N x K, exogenous columns first")
    n_exog = schema.Int(title=u"Included exogenous regressor count M", min=0)
    x_names = schema.Tuple(title=u"Regressor labels", value_type=schema.TextLine())
    z_names = schema.Tuple(title=u"Instrument labels", value_type=schema.TextLine())

    n = Attribute("Number of observations N")
    k = Attribute("Number of instruments K")
    l = Attribute("Number of regressors L")
    projection = Attribute("The :class:`~nti.ivreg.linalg.Projection` onto span(z)")


class IStructuralError(Interface):
    """
    Second moments of the structural and first-stage errors in the
    single-endogenous case.
    """

    sigma_eps2 = schema.Float(title=u"Variance of the structural error", min=0.0)
    sigma_eta2 = schema.Float(title=u"Variance of the first-stage error", min=0.0)
    sigma_eps_eta = schema.Float(title=u"Covariance of the two errors")
    rho = schema.Float(title=u"Correlation of the two errors", min=-1.0, max=1.0)


class IEstimateResult(Interface):
    """
    The output of an estimator.
    """

    estimator = schema.Choice(title=u"Estimator tag", values=ESTIMATOR_TAGS)
    beta = Attribute("Coefficient vector, length L")
    std_errors = Attribute("Asymptotic standard errors, length L")
    kappa = Attribute("The k-class parameter; set for LIML and fixed-kappa fits")
    sigma2_hat = schema.Float(title=u"Residual variance", min=0.0)
    fitted_instrument = Attribute("X-hat used in estimation (TSLS and JIVE)")


class IEstimator(Interface):
    """
    A named estimator, registered as a utility.
    """

    def __call__(dataset):
        """
        Fit *dataset* and return an :class:`IEstimateResult`.
        """


class IDiagnosticsReport(Interface):
    """
    First-stage strength diagnostics.
    """

    f_stat = schema.Float(title=u"First-stage F", min=0.0)
    r2 = schema.Float(title=u"Partial R^2 of the excluded instruments", min=0.0, max=1.0)
    adj_r2 = schema.Float(title=u"Adjusted partial R^2", max=1.0)
    mu2_over_k_hat = schema.Float(title=u"max(F - 1, 0)", min=0.0)
    k_excluded = schema.Int(title=u"Excluded instrument count", min=1)
    verdict = schema.Choice(title=u"Verdict", values=(STRONG, WEAK, INDETERMINATE))
    threshold_used = schema.Float(title=u"F threshold", required=False)


class IDGPConfig(Interface):
    """
    A simulation data-generating process with one endogenous regressor.
    """

    beta0 = schema.Float(title=u"Structural intercept")
    beta1 = schema.Float(title=u"Structural slope")
    pi0 = schema.Float(title=u"First-stage intercept")
    pi_excluded = schema.Tuple(title=u"First-stage coefficients on the K-1 instruments",
                               value_type=schema.Float(), min_length=1)
    sigma = Attribute("2 x 2 covariance of (epsilon, eta)")
    n = schema.Int(title=u"Sample size", min=3)
    k = schema.Int(title=u"Instrument columns, intercept included", min=2)
    instrument_dist = schema.Choice(title=u"Distribution of the instruments",
                                    values=('normal', 'uniform'),
                                    default='normal')

    @invariant
    def sample_larger_than_instruments(cfg):
        if cfg.n <= cfg.k:
            raise Invalid("Sample size %d must exceed the instrument count %d" % (cfg.n, cfg.k))

    @invariant
    def coefficients_match_instruments(cfg):
        if len(cfg.pi_excluded) != cfg.k - 1:
            raise Invalid("Expected %d excluded coefficients, got %d"
                          % (cfg.k - 1, len(cfg.pi_excluded)))


class IEstimatorSummary(Interface):
    """
    Monte-Carlo summary of one estimator.
    """

    estimator = schema.TextLine(title=u"Estimator name")
    quantiles = Attribute("Mapping of percent (0, 25, 50, 75, 100) to quantile of beta1-hat - beta1")
    median_bias = schema.Float(title=u"Median of beta1-hat - beta1", required=False)
    coverage95 = schema.Float(title=u"Coverage of the 95% interval", min=0.0, max=1.0,
                              required=False)
    n_success = schema.Int(title=u"Successful replications", min=0)
    n_failed = schema.Int(title=u"Failed replications", min=0)


class IMCSummary(Interface):
    """
    Monte-Carlo results over all requested estimators.
    """

    config = schema.Object(IDGPConfig, title=u"The simulated process")
    reps = schema.Int(title=u"Replications", min=1)
    seed = schema.Int(title=u"Master seed", min=0)
    estimators = Attribute("Mapping from estimator name to IEstimatorSummary")
    mean_f = Attribute("Mean first-stage F over replications")
    ar_rejection_rate = Attribute("Rejection rate of the 5% AR test at the true slope")


class IColumnSpec(Interface):
    """
    Declares how the columns of a table enter an IV specification.
    """

    outcome = schema.TextLine(title=u"Outcome column")
    endogenous = schema.Tuple(title=u"Endogenous regressor columns",
                              value_type=schema.TextLine(), min_length=1)
    controls_categorical = schema.Tuple(title=u"Categorical controls",
                                        value_type=schema.TextLine(), required=False,
                                        default=())
    controls_continuous = schema.Tuple(title=u"Continuous controls",
                                       value_type=schema.TextLine(), required=False,
                                       default=())
    instruments_categorical = schema.Tuple(title=u"Categorical instruments",
                                           value_type=schema.TextLine(), min_length=1)
    interactions = schema.Tuple(title=u"(instrument, control) interaction pairs",
                                value_type=schema.Tuple(value_type=schema.TextLine(),
                                                        min_length=2, max_length=2),
                                required=False, default=())
    reference_levels = schema.Dict(title=u"Override of the dropped level per categorical",
                                   key_type=schema.TextLine(), required=False)

    @invariant
    def interactions_are_declared(spec):
        for inst, control in spec.interactions:
            if inst not in spec.instruments_categorical:
                raise Invalid("%r is not a declared categorical instrument" % (inst,))
            if control not in spec.controls_categorical:
                raise Invalid("%r is not a declared categorical control" % (control,))


class IBuiltDesign(Interface):
    """
    A dataset built from a table and a column spec.
    """

    dataset = schema.Object(IIVDataset, title=u"The built dataset")
    spec = schema.Object(IColumnSpec, title=u"The column spec the design was built from")
    labels = Attribute("Mapping from instrument column name to its (variable, level) label")
    dropped_levels = Attribute("Mapping from categorical to its dropped reference level")


class IRunSettings(Interface):
    """
    Settings shared by the command line verbs.
    """

    workers = schema.Int(title=u"Worker processes", min=1)
    reps = schema.Int(title=u"Monte-Carlo replications", min=1)
    sweep_reps = schema.Int(title=u"Replications per sweep cell", min=1)
    seed = schema.Int(title=u"Master seed", min=0, max=2 ** 64 - 1)
    ar_grid_nodes = schema.Int(title=u"Anderson-Rubin grid nodes", min=2)
    ar_grid_width = schema.Float(title=u"Anderson-Rubin grid half-width, in standard errors",
                                 min=0.0)
    format = schema.Choice(title=u"Output format", values=('csv', 'json'))
