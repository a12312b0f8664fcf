#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Instrument strength diagnostics, analytic bias predictors and the
Anderson-Rubin test.

The first-stage F statistic tests that the excluded instruments have
zero coefficients in the regression of the endogenous regressor on
all instruments. ``F - 1`` estimates the concentration parameter per
instrument, ``mu^2 / K``. The verdict compares ``F`` with the weak
instrument critical values for a 10% maximal relative bias of 2SLS:

.. doctest::

   >>> from nti.ivreg.diagnostics import critical_value_lookup
   >>> critical_value_lookup(3)
   CriticalValue(threshold=3.71, f_critical=9.08)
   >>> critical_value_lookup(7) is None
   True
   >>> from nti.ivreg.diagnostics import weak_instrument_verdict
   >>> weak_instrument_verdict(9.5, 3)
   ('strong', 9.08)
   >>> weak_instrument_verdict(9.5, 7)
   ('weak', 10.0)
   >>> weak_instrument_verdict(9.5, 7, rule_of_thumb=False)
   ('indeterminate', None)

When the model has included exogenous regressors ``X0`` the
Anderson-Rubin statistic is computed after partialling ``X0`` out of
``Y``, ``X1`` and the excluded instruments, with the excluded
instrument count as the numerator degrees of freedom. Without
exogenous regressors this is exactly::

    AR(b) = ((Y - Xb)' P_Z (Y - Xb) / K) / ((Y - Xb)' M_Z (Y - Xb) / (N - K))
"""

__docformat__ = "restructuredtext en"

import logging
from collections import namedtuple

import numpy as np
import pandas as pd
from scipy import stats

from zope.interface import implementer

from nti.ivreg.errors import DegenerateFirstStage
from nti.ivreg.errors import DegenerateResidual
from nti.ivreg.errors import InvalidGrid
from nti.ivreg.errors import IVError
from nti.ivreg.errors import MultipleEndogenous
from nti.ivreg.errors import NoExcludedInstruments
from nti.ivreg.errors import NonpositiveVariance
from nti.ivreg.errors import ReplicationFailure
from nti.ivreg.estimators import fit_2sls
from nti.ivreg.estimators import fit_ols
from nti.ivreg.interfaces import IDiagnosticsReport
from nti.ivreg.interfaces import INDETERMINATE
from nti.ivreg.interfaces import STRONG
from nti.ivreg.interfaces import WEAK
from nti.ivreg.linalg import RANK_TOL

logger = logging.getLogger(__name__)

#: The F threshold used for instrument counts with no table row.
RULE_OF_THUMB_F = 10.0

#: Default number of nodes of an Anderson-Rubin search grid.
DEFAULT_GRID_NODES = 4001

#: Default half-width of an Anderson-Rubin search grid, in 2SLS
#: standard errors.
DEFAULT_GRID_WIDTH = 50.0

CriticalValue = namedtuple('CriticalValue', ('threshold', 'f_critical'))


class CriticalValueTable(object):
    """
    First-stage F critical values for a weak instrument test at the 5%
    level, keyed by the number of excluded instruments.

    ``threshold`` is the value of ``mu^2 / K`` beyond which the 2SLS
    relative bias is at most :attr:`relative_bias`; ``f_critical`` is
    the F value that rejects ``mu^2 / K <= threshold``.

    No interpolation is done between rows.
    """

    relative_bias = 0.10
    significance = 0.05

    def __init__(self, rows):
        self._rows = {int(k): CriticalValue(*v) for k, v in rows.items()}
        previous = None
        for k in sorted(self._rows):
            value = self._rows[k].f_critical
            if previous is not None and value < previous:
                raise ValueError("Critical values must not decrease in K (K=%d)" % k)
            previous = value

    def lookup(self, k_excluded):
        return self._rows.get(k_excluded)

    def __contains__(self, k_excluded):
        return k_excluded in self._rows

    def __iter__(self):
        return iter(sorted(self._rows))

    def items(self):
        return [(k, self._rows[k]) for k in self]


CRITICAL_VALUES = CriticalValueTable({
    3: (3.71, 9.08),
    5: (5.82, 10.83),
    10: (7.41, 11.49),
    15: (7.94, 11.51),
})


def critical_value_lookup(k_excluded):
    """
    The ``(threshold, f_critical)`` row for *k_excluded* excluded
    instruments, or None if the table has no such row.
    """
    return CRITICAL_VALUES.lookup(k_excluded)


def weak_instrument_verdict(f_stat, k_excluded, rule_of_thumb=True):
    """
    Return ``(verdict, threshold_used)``.

    The instruments are strong if *f_stat* exceeds the table critical
    value for *k_excluded*. Without a table row the rule-of-thumb
    threshold of 10 is used, unless *rule_of_thumb* is false, in
    which case the verdict is indeterminate.
    """
    row = critical_value_lookup(k_excluded)
    if row is not None:
        threshold = row.f_critical
    elif rule_of_thumb:
        threshold = RULE_OF_THUMB_F
    else:
        return INDETERMINATE, None
    return (STRONG if f_stat > threshold else WEAK), threshold


@implementer(IDiagnosticsReport)
class DiagnosticsReport(object):

    def __init__(self, f_stat, r2, adj_r2, k_excluded, verdict, threshold_used,
                 dof=None):
        self.f_stat = float(f_stat)
        self.r2 = float(r2)
        self.adj_r2 = float(adj_r2)
        self.mu2_over_k_hat = max(self.f_stat - 1.0, 0.0)
        self.k_excluded = int(k_excluded)
        self.verdict = verdict
        self.threshold_used = threshold_used
        self.dof = dof

    @property
    def table_row(self):
        "The critical value row this report was judged against, if any."
        return critical_value_lookup(self.k_excluded)

    @property
    def p_value(self):
        if self.dof is None:
            return None
        return float(stats.f.sf(self.f_stat, *self.dof))

    def __repr__(self):
        return '<%s F=%.6g K=%d %s>' % (type(self).__name__, self.f_stat,
                                        self.k_excluded, self.verdict)


def _single_endogenous(d):
    if d.l_endog != 1:
        raise MultipleEndogenous("Expected one endogenous regressor, got %d" % d.l_endog)
    if d.k_excluded < 1:
        raise NoExcludedInstruments("The model has no excluded instrument")
    return d.endog[:, 0]


def first_stage_f(d, rule_of_thumb=True):
    """
    The first-stage F statistic for the excluded instruments of *d*
    and the associated partial R^2.

    The unrestricted model regresses the endogenous column on all of
    ``Z``; the restricted one on ``X0`` only. With ``q = K - M``::

        F = ((RSS_r - RSS_u) / q) / (RSS_u / (N - K))

    ``r2`` is the share of ``RSS_r`` explained by the excluded
    instruments, and ``adj_r2`` its degrees-of-freedom adjusted
    version.

    When the endogenous column lies in the span of the instruments
    the first stage is perfect: ``F`` is infinite and both R^2 values
    are 1.

    :raises MultipleEndogenous: unless exactly one regressor is endogenous.
    :raises NoExcludedInstruments: if ``K == M``.
    :raises DegenerateResidual: if the endogenous column also lies in
        the span of the exogenous regressors.
    """
    x1 = _single_endogenous(d)
    q = d.k_excluded
    n, k, m = d.n, d.k, d.m
    resid_u = d.projection.annihilate(x1)
    resid_r = d.exog_projection.annihilate(x1)
    rss_u = float(resid_u @ resid_u)
    rss_r = float(resid_r @ resid_r)
    tol = (RANK_TOL * max(np.linalg.norm(x1), 1.0)) ** 2
    if rss_r <= tol:
        raise DegenerateResidual("The endogenous column is explained by the exogenous regressors")
    if rss_u <= tol:
        logger.warning("Perfect first stage: the endogenous column lies in span(Z)")
        verdict, threshold = weak_instrument_verdict(np.inf, q, rule_of_thumb)
        return DiagnosticsReport(np.inf, 1.0, 1.0, q, verdict, threshold, dof=(q, n - k))
    f_stat = max((rss_r - rss_u) / q, 0.0) / (rss_u / (n - k))
    r2 = min(max(1.0 - rss_u / rss_r, 0.0), 1.0)
    adj_r2 = 1.0 - (rss_u / (n - k)) / (rss_r / (n - m))
    verdict, threshold = weak_instrument_verdict(f_stat, q, rule_of_thumb)
    return DiagnosticsReport(f_stat, r2, adj_r2, q, verdict, threshold, dof=(q, n - k))


def first_stage_coefficients(d):
    """
    Coefficients and conventional standard errors of the excluded
    instruments in the first-stage regression, one row per
    instrument.

    :rtype: :class:`pandas.DataFrame` with columns ``instrument``,
        ``coef``, ``stderr`` and ``t``.
    """
    x1 = _single_endogenous(d)
    proj = d.projection
    coef = proj.coefficients(x1)
    resid = x1 - d.z @ coef
    s2 = float(resid @ resid) / (d.n - d.k)
    se = np.sqrt(s2 * np.diag(proj.gram_inverse))
    with np.errstate(divide='ignore', invalid='ignore'):
        t = coef / se
    m = d.m
    return pd.DataFrame({
        'instrument': list(d.z_names[m:]),
        'coef': coef[m:],
        'stderr': se[m:],
        't': t[m:],
    })


def concentration_parameter(pi, z, sigma_eta2):
    """
    ``mu^2 = pi'Z'Z pi / sigma_eta^2``.

    >>> import numpy as np
    >>> from nti.ivreg.diagnostics import concentration_parameter
    >>> concentration_parameter([0.5], np.ones((4, 1)), 0.25)
    4.0
    """
    if not sigma_eta2 > 0:
        raise NonpositiveVariance("sigma_eta2 must be positive, got %r" % (sigma_eta2,))
    fitted = np.asarray(z, dtype=float) @ np.asarray(pi, dtype=float)
    return float(fitted @ fitted) / sigma_eta2


def predict_bias_buse(sigma_eps_eta, pi, z, k_excluded):
    """
    The approximate 2SLS bias ``sigma_eps_eta (K - 2) / pi'Z'Z pi``.

    :raises DegenerateFirstStage: if ``pi'Z'Z pi`` is zero.
    """
    if k_excluded < 1:
        raise NoExcludedInstruments("k_excluded must be at least 1")
    fitted = np.asarray(z, dtype=float) @ np.asarray(pi, dtype=float)
    denominator = float(fitted @ fitted)
    if denominator <= 0:
        raise DegenerateFirstStage("pi'Z'Z pi is zero")
    return sigma_eps_eta * (k_excluded - 2) / denominator


def predict_bias_group_asym(sigma_eps_eta, sigma_eta2, f_pop):
    """
    The approximate 2SLS bias ``(sigma_eps_eta / sigma_eta^2) / (F + 1)``
    in terms of the population first-stage F.

    >>> from nti.ivreg.diagnostics import predict_bias_group_asym
    >>> round(predict_bias_group_asym(0.9, 1.0, 2.0), 12)
    0.3
    """
    if not sigma_eta2 > 0:
        raise NonpositiveVariance("sigma_eta2 must be positive, got %r" % (sigma_eta2,))
    if not f_pop >= 0:
        raise IVError("The population F must be nonnegative, got %r" % (f_pop,))
    return (sigma_eps_eta / sigma_eta2) / (f_pop + 1.0)


def predict_inconsistency(sigma_xhat_eps, var_xhat):
    """
    The probability limit of ``beta_2sls - beta``,
    ``sigma_{Xhat,eps} / sigma^2_{Xhat}``.
    """
    if not var_xhat > 0:
        raise NonpositiveVariance("var_xhat must be positive, got %r" % (var_xhat,))
    return sigma_xhat_eps / var_xhat


def _endogenous_part(d, beta0):
    beta0 = np.atleast_1d(np.asarray(beta0, dtype=float))
    if beta0.shape == (d.l,):
        beta0 = beta0[d.m:]
    if beta0.shape != (d.l_endog,):
        raise IVError("Expected %d endogenous coefficients, got %d"
                      % (d.l_endog, beta0.shape[0]))
    return beta0


def ar_statistic(d, beta0):
    """
    The Anderson-Rubin statistic for ``H0: beta1 = beta0``.

    *beta0* gives the endogenous coefficients (a scalar in the usual
    single-endogenous case); a full length-L vector is also accepted,
    and its exogenous part is ignored since those coefficients are
    concentrated out. Under the null the statistic is distributed
    ``F(K - M, N - K)`` with normal errors, whatever the strength of
    the instruments.

    :raises NoExcludedInstruments: if ``K == M``.
    :raises DegenerateResidual: if ``M_Z (Y - X1 beta0)`` is
        numerically zero.
    """
    q = d.k_excluded
    if q < 1:
        raise NoExcludedInstruments("The model has no excluded instrument")
    beta0 = _endogenous_part(d, beta0)
    resid = d.y - d.endog @ beta0
    partialled = d.exog_projection.annihilate(resid)
    fitted = d.projection.apply(partialled)
    remainder = d.projection.annihilate(resid)
    denominator = float(remainder @ remainder)
    if denominator <= (RANK_TOL * max(np.linalg.norm(resid), 1.0)) ** 2:
        raise DegenerateResidual("M_Z (Y - X beta0) is numerically zero")
    return (float(fitted @ fitted) / q) / (denominator / (d.n - d.k))


class Grid(object):
    """
    An evenly spaced search grid from *lo* to *hi* (inclusive, when
    *hi* falls on a node).
    """

    def __init__(self, lo, hi, step):
        lo, hi, step = float(lo), float(hi), float(step)
        if not (np.isfinite(lo) and np.isfinite(hi) and np.isfinite(step)):
            raise InvalidGrid("Grid bounds must be finite")
        if not step > 0:
            raise InvalidGrid("Grid step must be positive, got %r" % (step,))
        if hi < lo:
            raise InvalidGrid("Grid is empty: lo=%r > hi=%r" % (lo, hi))
        self.lo, self.hi, self.step = lo, hi, step

    @classmethod
    def around(cls, center, half_width, nodes):
        """
        A grid of *nodes* points covering ``center +/- half_width``.
        """
        if nodes < 2:
            raise InvalidGrid("A grid needs at least two nodes")
        return cls(center - half_width, center + half_width, 2.0 * half_width / (nodes - 1))

    @property
    def nodes(self):
        count = int(np.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return self.lo + self.step * np.arange(count)

    def __repr__(self):
        return 'Grid(%r, %r, %r)' % (self.lo, self.hi, self.step)


class ConfidenceSet(object):
    """
    The grid nodes not rejected by the Anderson-Rubin test, merged
    into maximal intervals of consecutive nodes.
    """

    def __init__(self, nodes, statistics, critical_value, level):
        self.nodes = nodes
        self.statistics = statistics
        self.critical_value = float(critical_value)
        self.level = level
        self.accepted = statistics <= critical_value
        self.intervals = self._merge(nodes, self.accepted)

    @staticmethod
    def _merge(nodes, accepted):
        intervals = []
        start = None
        for i, ok in enumerate(accepted):
            if ok and start is None:
                start = i
            elif not ok and start is not None:
                intervals.append((float(nodes[start]), float(nodes[i - 1])))
                start = None
        if start is not None:
            intervals.append((float(nodes[start]), float(nodes[-1])))
        return intervals

    @property
    def empty(self):
        return not self.intervals

    @property
    def unbounded(self):
        "Both ends of the grid are accepted."
        return bool(self.accepted[0] and self.accepted[-1])

    @property
    def accepted_fraction(self):
        return float(np.mean(self.accepted))

    def contains(self, value):
        return any(lo <= value <= hi for lo, hi in self.intervals)

    def __repr__(self):
        return '<%s %s%s>' % (type(self).__name__, self.intervals,
                              ' unbounded' if self.unbounded else '')


def ar_statistics(d, betas):
    """
    :func:`ar_statistic` for each value in *betas*, vectorised for a
    single endogenous regressor. Nodes where both quadratic forms
    vanish (a noiseless model at its true coefficient) get 0.
    """
    x1 = _single_endogenous(d)
    betas = np.asarray(betas, dtype=float)
    q = d.k_excluded
    ey = d.exog_projection.annihilate(d.y)
    ex = d.exog_projection.annihilate(x1)
    py, px = d.projection.apply(ey), d.projection.apply(ex)
    my, mx = d.projection.annihilate(d.y), d.projection.annihilate(x1)
    numerator = (py @ py) - 2 * betas * (py @ px) + betas ** 2 * (px @ px)
    denominator = (my @ my) - 2 * betas * (my @ mx) + betas ** 2 * (mx @ mx)
    numerator = np.maximum(numerator, 0.0)
    denominator = np.maximum(denominator, 0.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        result = (numerator / q) / (denominator / (d.n - d.k))
    return np.nan_to_num(result, nan=0.0, posinf=np.inf)


def default_grid(d, nodes=DEFAULT_GRID_NODES, width=DEFAULT_GRID_WIDTH):
    """
    ``beta_2sls +/- width * SE`` with *nodes* points; OLS is used
    when 2SLS does not exist for *d*.
    """
    try:
        result = fit_2sls(d)
    except ReplicationFailure:
        logger.info("2SLS is undefined; centering the AR grid on OLS")
        result = fit_ols(d)
    center, se = result.coef(), result.stderr()
    if not (np.isfinite(se) and se > 0):
        se = 1.0
    return Grid.around(center, width * se, nodes)


def ar_confidence_set(d, level=0.05, grid=None):
    """
    Invert the Anderson-Rubin test of size *level* over *grid*: the
    result contains every node ``b`` with ``AR(b)`` at most the
    ``1 - level`` quantile of ``F(K - M, N - K)``, so the default
    gives a 95% set.

    The set may be empty, a union of disjoint intervals, or cover the
    whole grid; :attr:`ConfidenceSet.unbounded` reports the last case.

    :param grid: A :class:`Grid`, a ``(lo, hi, step)`` triple, or None
        for :func:`default_grid`.
    :raises InvalidGrid: for a malformed grid.
    """
    _single_endogenous(d)
    if not 0 < level < 1:
        raise IVError("Test level must lie in (0, 1), got %r" % (level,))
    if grid is None:
        grid = default_grid(d)
    elif not isinstance(grid, Grid):
        grid = Grid(*grid)
    nodes = grid.nodes
    critical = stats.f.ppf(1.0 - level, d.k_excluded, d.n - d.k)
    result = ConfidenceSet(nodes, ar_statistics(d, nodes), critical, level)
    logger.debug("AR set over %d nodes: %s", len(nodes), result.intervals)
    return result
