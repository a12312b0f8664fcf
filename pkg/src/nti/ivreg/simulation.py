#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Data-generating processes and the Monte-Carlo engine.

The simulated model has one endogenous regressor and an intercept::

    Y = beta0 + beta1 X + epsilon
    X = pi0 + z_1 pi_1 + ... + z_{K-1} pi_{K-1} + eta

where the ``z_j`` are IID with mean zero and unit variance, and
``(epsilon, eta)`` is bivariate normal with covariance ``sigma``.

Four presets with ``N = 200`` are available from :func:`model_preset`:

.. doctest::

   >>> from nti.ivreg.simulation import model_preset
   >>> cfg = model_preset(3)
   >>> cfg.k, cfg.n, set(cfg.pi_excluded)
   (16, 200, {0.3})
   >>> model_preset(4).sigma.tolist()
   [[0.25, 0.2], [0.2, 0.25]]

Replication ``r`` of :func:`run_mc` always draws from the stream
``derive_seed(master_seed, r)``, so results do not depend on the
number of worker processes.
"""

__docformat__ = "restructuredtext en"

import logging
import math
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pandas as pd
from scipy import stats

from zope.interface import implementer

from nti.ivreg.dataset import StructuralError
from nti.ivreg.dataset import build_dataset
from nti.ivreg.diagnostics import ar_statistic
from nti.ivreg.diagnostics import first_stage_f
from nti.ivreg.errors import InvalidCovariance
from nti.ivreg.errors import InvalidSweepValue
from nti.ivreg.errors import IVError
from nti.ivreg.errors import NonpositiveVariance
from nti.ivreg.errors import ReplicationFailure
from nti.ivreg.estimators import get_estimator
from nti.ivreg.interfaces import IDGPConfig
from nti.ivreg.interfaces import IEstimatorSummary
from nti.ivreg.interfaces import IMCSummary
from nti.ivreg.interfaces import validate_schema
from nti.ivreg.rng import derive_seed
from nti.ivreg.rng import rng_for

logger = logging.getLogger(__name__)

#: Estimators compared by default.
DEFAULT_ESTIMATORS = ('ols', '2sls', 'liml', 'jive')

#: Percent points reported for the distribution of beta1-hat - beta1.
QUANTILE_PERCENTS = (0, 25, 50, 75, 100)

#: Sample sizes of a sweep.
SWEEP_SIZES = (25, 50, 100, 200, 400, 800)

#: The values held fixed while one sweep axis varies.
SWEEP_BASE = {'rho': 0.9, 'r2_limit': 0.1, 'k': 7}

SQRT3 = math.sqrt(3.0)


@implementer(IDGPConfig)
class DGPConfig(object):
    """
    A validated simulation design.

    :param pi_excluded: The K - 1 first-stage coefficients of the
        excluded instruments.
    :param sigma: The 2 x 2 covariance of ``(epsilon, eta)``; it must
        be symmetric positive semidefinite.
    :param k: Instrument columns including the intercept; defaults
        to ``len(pi_excluded) + 1``.
    :raises InvalidCovariance: for a bad *sigma*.
    :raises InvalidConfiguration: if any other field is invalid.
    """

    def __init__(self, beta0, beta1, pi0, pi_excluded, sigma, n, k=None,
                 instrument_dist='normal'):
        self.beta0 = float(beta0)
        self.beta1 = float(beta1)
        self.pi0 = float(pi0)
        self.pi_excluded = tuple(float(p) for p in np.atleast_1d(pi_excluded))
        self.n = int(n)
        self.k = len(self.pi_excluded) + 1 if k is None else int(k)
        self.instrument_dist = instrument_dist
        self.sigma = self._check_sigma(sigma)
        validate_schema(IDGPConfig, self)

    @staticmethod
    def _check_sigma(sigma):
        sigma = np.array(sigma, dtype=float)
        if sigma.shape != (2, 2) or not np.all(np.isfinite(sigma)):
            raise InvalidCovariance("sigma must be a finite 2 x 2 matrix")
        if sigma[0, 1] != sigma[1, 0]:
            raise InvalidCovariance("sigma is not symmetric: %s" % (sigma.tolist(),))
        vals = np.linalg.eigvalsh(sigma)
        if vals.min() < -1e-12 * max(1.0, abs(vals.max())):
            raise InvalidCovariance("sigma is not positive semidefinite: %s" % (sigma.tolist(),))
        sigma.flags.writeable = False
        return sigma

    @classmethod
    def with_equal_pi(cls, beta0, beta1, pi0, pi, k, sigma, n, **kwargs):
        "All K - 1 excluded coefficients equal to *pi*."
        return cls(beta0, beta1, pi0, (pi,) * (int(k) - 1), sigma, n, **kwargs)

    @classmethod
    def from_sweep(cls, rho, r2_limit, k, n, **kwargs):
        """
        The sweep design: ``beta0 = beta1 = 1``, ``pi0 = 0``,
        ``sigma_eps^2 = 1``, equal excluded coefficients normalized so
        that ``||pi||^2 + sigma_eta^2 = 1`` at the given limiting R^2,
        and ``corr(epsilon, eta) = rho``.
        """
        if not -1 < rho < 1:
            raise InvalidSweepValue("rho must lie in (-1, 1), got %r" % (rho,))
        if int(k) < 2:
            raise InvalidSweepValue("K must be at least 2, got %r" % (k,))
        norm = normalize_r2(r2_limit, k)
        err = StructuralError.from_rho(1.0, norm.sigma_eta2, rho)
        return cls(1.0, 1.0, 0.0, norm.pi_excluded, err.covariance, n, **kwargs)

    def replace(self, **kwargs):
        args = dict(beta0=self.beta0, beta1=self.beta1, pi0=self.pi0,
                    pi_excluded=self.pi_excluded, sigma=self.sigma, n=self.n,
                    instrument_dist=self.instrument_dist)
        args.update(kwargs)
        if 'pi_excluded' in kwargs and 'k' not in kwargs:
            args['k'] = None
        else:
            args.setdefault('k', self.k)
        return type(self)(**args)

    @property
    def pi(self):
        "``(pi0, pi_1, ..., pi_{K-1})``."
        return np.array((self.pi0,) + self.pi_excluded)

    @property
    def sigma_eps2(self):
        return float(self.sigma[0, 0])

    @property
    def sigma_eta2(self):
        return float(self.sigma[1, 1])

    @property
    def sigma_eps_eta(self):
        return float(self.sigma[0, 1])

    def __eq__(self, other):
        if not isinstance(other, DGPConfig):
            return NotImplemented
        return (self.beta0, self.beta1, self.pi0, self.pi_excluded, self.n, self.k,
                self.instrument_dist, self.sigma.tolist()) == \
               (other.beta0, other.beta1, other.pi0, other.pi_excluded, other.n, other.k,
                other.instrument_dist, other.sigma.tolist())

    __hash__ = None

    def __repr__(self):
        return '<%s N=%d K=%d beta1=%r sigma=%s>' % (type(self).__name__, self.n, self.k,
                                                     self.beta1, self.sigma.tolist())


Normalized = namedtuple('Normalized', ('pi_norm2', 'sigma_eta2', 'pi_excluded'))


def r2_limit(pi_excluded, sigma_eta2):
    """
    The limiting R^2 of the first stage,
    ``1 / (1 + sigma_eta^2 / ||pi||^2)``, or 0 when ``pi = 0``.

    >>> from nti.ivreg.simulation import r2_limit
    >>> r2_limit([0.5], 0.25)
    0.5
    """
    if not sigma_eta2 > 0:
        raise NonpositiveVariance("sigma_eta2 must be positive, got %r" % (sigma_eta2,))
    pi = np.asarray(pi_excluded, dtype=float)
    pi_norm2 = float(pi @ pi)
    if pi_norm2 == 0:
        return 0.0
    return 1.0 / (1.0 + sigma_eta2 / pi_norm2)


def normalize_r2(r2, k):
    """
    The inverse of :func:`r2_limit` under ``||pi||^2 + sigma_eta^2 = 1``
    with the K - 1 coefficients equal.

    >>> from nti.ivreg.simulation import normalize_r2
    >>> norm = normalize_r2(0.1, 7)
    >>> round(norm.pi_norm2, 12), round(norm.sigma_eta2, 12), len(norm.pi_excluded)
    (0.1, 0.9, 6)
    """
    r2 = float(r2)
    if not 0 <= r2 < 1:
        raise InvalidSweepValue("The limiting R^2 must lie in [0, 1), got %r" % (r2,))
    k = int(k)
    if k < 2:
        raise InvalidSweepValue("K must be at least 2, got %r" % (k,))
    component = math.sqrt(r2 / (k - 1))
    return Normalized(r2, 1.0 - r2, (component,) * (k - 1))


def population_first_stage_f(cfg):
    """
    ``mu^2 / (K - 1)`` with the expected concentration parameter
    ``N ||pi||^2 / sigma_eta^2`` of the design.
    """
    pi = np.asarray(cfg.pi_excluded)
    return cfg.n * float(pi @ pi) / (cfg.sigma_eta2 * (cfg.k - 1))


def _instruments(cfg, rng):
    shape = (cfg.n, cfg.k - 1)
    if cfg.instrument_dist == 'uniform':
        return rng.uniform(-SQRT3, SQRT3, size=shape)
    return rng.standard_normal(shape)


def generate(cfg, seed):
    """
    Draw one sample of *cfg* from the stream keyed by *seed*.

    The result has ``x = [1, X]``, ``z = [1, z_1, ..., z_{K-1}]`` and
    one included exogenous column, the intercept.
    """
    rng = rng_for(seed)
    ones = np.ones(cfg.n)
    z = np.column_stack([ones, _instruments(cfg, rng)])
    vals, vecs = np.linalg.eigh(cfg.sigma)
    factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
    errors = rng.standard_normal((cfg.n, 2)) @ factor.T
    x = z @ cfg.pi + errors[:, 1]
    y = cfg.beta0 + cfg.beta1 * x + errors[:, 0]
    names = (('const', 'x'), ('const',) + tuple('z%d' % i for i in range(1, cfg.k)))
    return build_dataset(y, np.column_stack([ones, x]), z, n_exog=1, column_names=names)


_PRESETS = {
    1: dict(pi=0.3, k=2, sigma=[[0.25, 0.20], [0.20, 0.25]]),
    2: dict(pi=0.2, k=2, sigma=[[1.0, 0.9], [0.9, 1.0]]),
    3: dict(pi=0.3, k=16, sigma=[[0.25, 0.10], [0.10, 0.25]]),
    4: dict(pi=0.1, k=16, sigma=[[0.25, 0.20], [0.20, 0.25]]),
}

#: ``(median bias, 95% coverage)`` reported for the presets by the
#: study that introduced them, keyed by preset and estimator.
REFERENCE_RESULTS = {
    1: {'ols': (0.587, 0.000), '2sls': (0.000, 0.536),
        'liml': (0.000, 0.539), 'jive': (-0.023, 0.999)},
    2: {'ols': (0.864, 0.000), '2sls': (0.000, 0.141),
        'liml': (0.059, 0.145), 'jive': (-0.160, 0.846)},
    3: {'ols': (0.063, 0.370), '2sls': (0.005, 0.925),
        'liml': (0.000, 0.921), 'jive': (0.000, 0.999)},
    4: {'ols': (0.500, 0.000), '2sls': (0.085, 0.477),
        'liml': (0.000, 0.921), 'jive': (-0.014, 0.996)},
}


def model_preset(model, n=200):
    """
    Preset *model* (1 to 4): just-identified with a strong (1) or weak
    (2) instrument, and over-identified with 15 strong (3) or weak (4)
    instruments. ``beta0 = beta1 = 1`` and ``pi0 = 0`` throughout.
    """
    try:
        preset = _PRESETS[int(model)]
    except (KeyError, ValueError, TypeError):
        raise KeyError("Unknown model %r; choose from %s" % (model, sorted(_PRESETS))) from None
    return DGPConfig.with_equal_pi(1.0, 1.0, 0.0, preset['pi'], preset['k'],
                                   preset['sigma'], n)


def order_quantiles(values, percents=QUANTILE_PERCENTS):
    """
    Lower order-statistic quantiles: the ``p`` quantile of ``n``
    values is the ``ceil(p n)``-th smallest (the smallest for
    ``p = 0``), so the median of an even count is the lower middle.

    >>> from nti.ivreg.simulation import order_quantiles
    >>> order_quantiles([4., 1., 3., 2.])
    {0: 1.0, 25: 1.0, 50: 2.0, 75: 3.0, 100: 4.0}
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return {p: None for p in percents}
    qs = np.quantile(values, [p / 100.0 for p in percents], method='inverted_cdf')
    return {p: float(q) for p, q in zip(percents, qs)}


@implementer(IEstimatorSummary)
class EstimatorSummary(object):
    """
    The Monte-Carlo distribution of one estimator.

    ``draws`` holds the sorted slope estimates of the successful
    replications.
    """

    def __init__(self, estimator, beta1, slopes, intercept_errors, covered, failures):
        slopes = np.sort(np.asarray(slopes, dtype=float))
        errors = slopes - beta1
        self.estimator = estimator
        self.beta1 = beta1
        self.draws = slopes
        self.quantiles = order_quantiles(errors)
        self.median_bias = self.quantiles[50]
        self.mean_bias = float(np.mean(errors)) if errors.size else None
        self.intercept_quantiles = order_quantiles(intercept_errors)
        self.intercept_median_bias = self.intercept_quantiles[50]
        self.coverage95 = float(np.mean(covered)) if len(covered) else None
        self.n_success = int(errors.size)
        self.failures = dict(failures)
        self.n_failed = sum(self.failures.values())

    def __repr__(self):
        return '<%s %s median_bias=%r coverage95=%r>' % (
            type(self).__name__, self.estimator, self.median_bias, self.coverage95)


@implementer(IMCSummary)
class MCSummary(object):

    def __init__(self, config, reps, seed, estimators, mean_f, ar_rejection_rate):
        self.config = config
        self.reps = reps
        self.seed = seed
        self.estimators = estimators
        self.mean_f = mean_f
        self.ar_rejection_rate = ar_rejection_rate

    def __getitem__(self, name):
        return self.estimators[name]

    def to_frame(self):
        """
        One row per estimator, in request order.
        """
        rows = []
        for name, summary in self.estimators.items():
            row = {'estimator': name}
            for p in QUANTILE_PERCENTS:
                row['q%d' % p] = summary.quantiles[p]
            row.update(median_bias=summary.median_bias,
                       coverage95=summary.coverage95,
                       intercept_median_bias=summary.intercept_median_bias,
                       n_success=summary.n_success,
                       n_failed=summary.n_failed)
            rows.append(row)
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


SUMMARY_COLUMNS = (('estimator',)
                   + tuple('q%d' % p for p in QUANTILE_PERCENTS)
                   + ('median_bias', 'coverage95', 'intercept_median_bias',
                      'n_success', 'n_failed'))


def _replicate_chunk(cfg, names, master_seed, start, stop):
    """
    Run replications ``start`` to ``stop - 1``. Module level so that
    worker processes can unpickle it.
    """
    fits = [(name, get_estimator(name)) for name in names]
    ar_critical = stats.f.ppf(0.95, cfg.k - 1, cfg.n - cfg.k)
    records = []
    for r in range(start, stop):
        d = generate(cfg, derive_seed(master_seed, r))
        outcome = {}
        for name, fit in fits:
            try:
                result = fit(d)
            except ReplicationFailure as ex:
                logger.debug("Replication %d: %s failed: %s", r, name, ex)
                outcome[name] = type(ex).__name__
            else:
                outcome[name] = (result.coef(-1), result.coef(0) - cfg.beta0,
                                 result.covers(cfg.beta1))
        try:
            f_stat = first_stage_f(d).f_stat
        except IVError:
            f_stat = float('nan')
        try:
            ar_reject = ar_statistic(d, cfg.beta1) > ar_critical
        except IVError:
            ar_reject = None
        records.append((r, outcome, f_stat, ar_reject))
    return records


def _chunks(reps, workers):
    size = max(1, int(math.ceil(reps / float(workers * 4))))
    return [(start, min(start + size, reps)) for start in range(0, reps, size)]


def _run_records(cfg, names, reps, master_seed, workers):
    if workers <= 1:
        return _replicate_chunk(cfg, names, master_seed, 0, reps)
    chunks = _chunks(reps, workers)
    records = []
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(_replicate_chunk, cfg, names, master_seed, start, stop)
                   for start, stop in chunks]
        for future in futures:
            records.extend(future.result())
    return records


def run_mc(cfg, reps, estimators=DEFAULT_ESTIMATORS, master_seed=42, workers=1):
    """
    Simulate *reps* samples of *cfg* and fit each named estimator to
    each.

    Replications where an estimator raises a
    :class:`~nti.ivreg.errors.ReplicationFailure` are excluded from
    that estimator's statistics and counted by error class.

    :return: An :class:`MCSummary`.
    :raises KeyError: for an unknown estimator name.
    """
    reps = int(reps)
    if reps < 1:
        raise IVError("reps must be at least 1, got %r" % (reps,))
    names = tuple(estimators)
    for name in names:
        get_estimator(name)
    logger.info("Simulating %r: %d replications of %s, seed %d, %d worker(s)",
                cfg, reps, ','.join(names), master_seed, workers)
    records = _run_records(cfg, names, reps, master_seed, int(workers))

    summaries = {}
    for name in names:
        slopes, intercepts, covered, failures = [], [], [], {}
        for _r, outcome, _f, _ar in records:
            value = outcome[name]
            if isinstance(value, str):
                failures[value] = failures.get(value, 0) + 1
                continue
            slopes.append(value[0])
            intercepts.append(value[1])
            covered.append(value[2])
        summaries[name] = EstimatorSummary(name, cfg.beta1, slopes, intercepts,
                                           covered, failures)
        if failures:
            logger.info("%s failed in %d of %d replications: %s",
                        name, sum(failures.values()), reps, failures)

    f_stats = np.array([f for _r, _o, f, _ar in records])
    mean_f = float(np.nanmean(f_stats)) if np.any(np.isfinite(f_stats)) else None
    rejections = [ar for _r, _o, _f, ar in records if ar is not None]
    ar_rate = float(np.mean(rejections)) if rejections else None
    logger.info("Finished %d replications; mean first-stage F %s", reps, mean_f)
    return MCSummary(cfg, reps, master_seed, summaries, mean_f, ar_rate)


def histogram(summary, estimator, lo=-3.0, hi=5.0, bins=80):
    """
    The distribution of the slope estimates of *estimator* within
    ``[lo, hi]``, binned for plotting. Estimates outside the window
    are dropped; ``density`` is normalized over the retained ones.

    :rtype: :class:`pandas.DataFrame` with columns ``bin_lo``,
        ``bin_hi``, ``count`` and ``density``.
    """
    if not hi > lo or int(bins) < 1:
        raise IVError("Need lo < hi and at least one bin")
    draws = summary[estimator].draws
    inside = draws[(draws >= lo) & (draws <= hi)]
    counts, edges = np.histogram(inside, bins=int(bins), range=(lo, hi))
    width = edges[1] - edges[0]
    total = counts.sum()
    density = counts / (total * width) if total else np.zeros_like(counts, dtype=float)
    return pd.DataFrame({'bin_lo': edges[:-1], 'bin_hi': edges[1:],
                         'count': counts, 'density': density})


SWEEP_AXES = ('rho', 'r2_limit', 'k')

SWEEP_COLUMNS = ('axis', 'value', 'n', 'estimator', 'median_bias',
                 'coverage95', 'n_success', 'n_failed')


def _sweep_config(axis, value, n):
    params = dict(SWEEP_BASE)
    if axis == 'k':
        if float(value) != int(value):
            raise InvalidSweepValue("K must be an integer, got %r" % (value,))
        value = int(value)
    params[axis] = value
    return DGPConfig.from_sweep(params['rho'], params['r2_limit'], params['k'], n)


def run_sweep(axis, values, sizes=SWEEP_SIZES, reps=1000, estimators=DEFAULT_ESTIMATORS,
              master_seed=42, workers=1):
    """
    Median biases over a grid of designs: *axis* (``rho``,
    ``r2_limit`` or ``k``) takes each of *values* while the other two
    stay at ``rho = 0.9``, ``R^2 = 0.1``, ``K = 7``, for every sample
    size in *sizes*. Every cell uses the same *master_seed*.

    :return: A long :class:`pandas.DataFrame` with one row per
        (value, sample size, estimator).
    :raises InvalidSweepValue: for an unknown axis or a value outside
        its range, before any simulation runs.
    """
    if axis not in SWEEP_AXES:
        raise InvalidSweepValue("Unknown sweep axis %r; choose from %s" % (axis, SWEEP_AXES))
    values = list(values)
    if not values:
        raise InvalidSweepValue("No sweep values given")
    cells = []
    for value in values:
        for n in sizes:
            try:
                cells.append((value, n, _sweep_config(axis, value, n)))
            except InvalidSweepValue:
                raise
            except IVError as ex:
                raise InvalidSweepValue("Invalid %s=%r at N=%d: %s" % (axis, value, n, ex)) from ex
    logger.info("Sweeping %s over %s at N in %s", axis, values, list(sizes))
    rows = []
    for value, n, cfg in cells:
        summary = run_mc(cfg, reps, estimators, master_seed, workers)
        for name, est in summary.estimators.items():
            rows.append({'axis': axis, 'value': value, 'n': n, 'estimator': name,
                         'median_bias': est.median_bias, 'coverage95': est.coverage95,
                         'n_success': est.n_success, 'n_failed': est.n_failed})
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def replicate_presets(reps, estimators=DEFAULT_ESTIMATORS, master_seed=42, workers=1, n=200):
    """
    Run all four presets and set each estimator's median bias and
    coverage beside the :data:`REFERENCE_RESULTS`.
    """
    rows = []
    for model in sorted(_PRESETS):
        summary = run_mc(model_preset(model, n), reps, estimators, master_seed, workers)
        for name, est in summary.estimators.items():
            ref_bias, ref_cov = REFERENCE_RESULTS[model].get(name, (None, None))
            rows.append({'model': model, 'estimator': name,
                         'median_bias': est.median_bias, 'reference_median_bias': ref_bias,
                         'coverage95': est.coverage95, 'reference_coverage95': ref_cov,
                         'n_success': est.n_success, 'n_failed': est.n_failed,
                         'mean_f': summary.mean_f,
                         'ar_rejection_rate': summary.ar_rejection_rate})
    return pd.DataFrame(rows, columns=REPLICATE_COLUMNS)


REPLICATE_COLUMNS = ('model', 'estimator', 'median_bias', 'reference_median_bias',
                     'coverage95', 'reference_coverage95', 'n_success', 'n_failed',
                     'mean_f', 'ar_rejection_rate')
