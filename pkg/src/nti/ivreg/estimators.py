#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
OLS, two-stage least squares, JIVE and LIML point estimation.

All four are k-class estimators except JIVE::

    beta(kappa) = (X'(I - kappa M_Z) X)^{-1} X'(I - kappa M_Z) Y

with ``kappa = 0`` for OLS, ``kappa = 1`` for 2SLS, and for LIML the
smallest eigenvalue of the ratio of the ``M_{X0}`` and ``M_Z`` Gram
matrices of ``[Y X1]``.

Standard errors are the conventional homoskedastic ones, with
``sigma2_hat = RSS / (N - L)`` computed from the structural residuals
``Y - X beta_hat``.

Estimators are also available by name as :class:`.IEstimator`
utilities:

.. doctest::

   >>> from nti.ivreg.estimators import get_estimator
   >>> get_estimator('2sls') # doctest: +ELLIPSIS
   <function fit_2sls at ...>
   >>> sorted(ESTIMATORS)
   ['2sls', 'jive', 'jive-naive', 'liml', 'ols']
"""

__docformat__ = "restructuredtext en"

import logging

import numpy as np
from scipy import linalg

from zope import component
from zope.component import named
from zope.interface import implementer
from zope.interface import provider

from nti.ivreg.errors import IVError
from nti.ivreg.errors import LeverageOne
from nti.ivreg.errors import RankDeficientDesign
from nti.ivreg.errors import WeakRankFailure
from nti.ivreg.interfaces import IEstimateResult
from nti.ivreg.interfaces import IEstimator
from nti.ivreg.interfaces import JIVE
from nti.ivreg.interfaces import KCLASS
from nti.ivreg.interfaces import LIML
from nti.ivreg.interfaces import OLS
from nti.ivreg.interfaces import TSLS
from nti.ivreg.linalg import Projection
from nti.ivreg.linalg import RANK_TOL
from nti.ivreg.linalg import inv_sqrth
from nti.ivreg.linalg import smallest_eigenvalue

logger = logging.getLogger(__name__)

#: Leverages at or above ``1 - LEVERAGE_TOL`` make JIVE undefined.
LEVERAGE_TOL = 1e-10

#: Gram matrices with a larger condition number are treated as singular.
GRAM_COND_LIMIT = 1e14

NAIVE = 'naive'
ACCELERATED = 'accelerated'


@implementer(IEstimateResult)
class EstimateResult(object):
    """
    Coefficients, standard errors and auxiliary output of one fit.
    """

    def __init__(self, estimator, beta, std_errors, sigma2_hat,
                 kappa=None, fitted_instrument=None, names=None):
        self.estimator = estimator
        self.beta = np.asarray(beta, dtype=float)
        self.std_errors = np.asarray(std_errors, dtype=float)
        self.sigma2_hat = float(sigma2_hat)
        self.kappa = None if kappa is None else float(kappa)
        self.fitted_instrument = fitted_instrument
        self.names = tuple(names) if names is not None else None

    def coef(self, which=-1):
        """
        The coefficient at index (or with the name) *which*; by default
        the last regressor, which is the endogenous one in the usual
        single-endogenous layout.
        """
        return float(self.beta[self._index(which)])

    def stderr(self, which=-1):
        return float(self.std_errors[self._index(which)])

    def covers(self, value, which=-1, z=1.96):
        """
        Does ``coef +/- z * stderr`` contain *value*?
        """
        index = self._index(which)
        return bool(abs(self.beta[index] - value) <= z * self.std_errors[index])

    def _index(self, which):
        if isinstance(which, str):
            return self.names.index(which)
        return which

    def __repr__(self):
        return '<%s %s beta=%s>' % (type(self).__name__, self.estimator,
                                    np.array2string(self.beta, precision=6))


class KClassSpec(object):
    """
    The k-class parameter: 0 gives OLS, 1 gives 2SLS, the LIML
    eigenvalue gives LIML.
    """

    def __init__(self, kappa):
        kappa = float(kappa)
        if not kappa >= 0:
            raise IVError("kappa must be nonnegative, got %r" % (kappa,))
        self.kappa = kappa

    def __repr__(self):
        return 'KClassSpec(%r)' % (self.kappa,)


def _residual_variance(d, beta):
    resid = d.y - d.x @ beta
    return float(resid @ resid) / (d.n - d.l)


def _solve_gram(a, b, error=RankDeficientDesign):
    """
    Solve the small symmetric system ``a beta = b`` and return
    ``(beta, a^{-1})``.
    """
    if not np.all(np.isfinite(a)) or np.linalg.cond(a) > GRAM_COND_LIMIT:
        raise error("Normal matrix is numerically singular")
    inverse = linalg.inv(a)
    return inverse @ b, inverse


#: Estimators by name, used when the component registry has none.
ESTIMATORS = {}


def _estimator(name):
    def wrap(func):
        func = named(name)(func)
        func = provider(IEstimator)(func)
        assert name not in ESTIMATORS
        ESTIMATORS[name] = func
        return func
    return wrap


def get_estimator(name):
    """
    Find the :class:`.IEstimator` named *name*, preferring registered
    utilities over the built-in table.

    :raises KeyError: for an unknown name.
    """
    result = component.queryUtility(IEstimator, name=name,
                                    default=ESTIMATORS.get(name))
    if result is None:
        raise KeyError(name)
    return result


def register_estimators(registry=None):
    """
    Register every built-in estimator as a named :class:`.IEstimator`
    utility in *registry* (the global registry by default).
    """
    registry = registry if registry is not None else component.getGlobalSiteManager()
    for name, func in ESTIMATORS.items():
        registry.registerUtility(func, IEstimator, name=name)


@_estimator('ols')
def fit_ols(d):
    """
    Ordinary least squares of ``y`` on ``x``.

    :raises RankDeficientDesign: if ``x`` is rank deficient.
    """
    qr = Projection(d.x, error=RankDeficientDesign)
    beta = qr.coefficients(d.y)
    sigma2 = _residual_variance(d, beta)
    se = np.sqrt(sigma2 * np.diag(qr.gram_inverse))
    return EstimateResult(OLS, beta, se, sigma2, names=d.x_names)


@_estimator('2sls')
def fit_2sls(d):
    """
    Two-stage least squares, ``(X'P_Z X)^{-1} X'P_Z Y``.

    The first stage fit ``P_Z X`` is returned as the fitted instrument.

    :raises WeakRankFailure: if ``X'P_Z X`` is numerically singular,
        for instance a single instrument with zero sample covariance
        with the endogenous regressor.
    """
    xhat = d.projection.apply(d.x)
    qr = Projection(xhat, error=WeakRankFailure)
    # xhat'x == xhat'xhat, so this is the 2SLS solution.
    beta = qr.coefficients(d.y)
    sigma2 = _residual_variance(d, beta)
    se = np.sqrt(sigma2 * np.diag(qr.gram_inverse))
    return EstimateResult(TSLS, beta, se, sigma2, fitted_instrument=xhat, names=d.x_names)


def fit_kclass(d, spec):
    """
    The k-class estimator ``(X'(I - k M_Z)X)^{-1} X'(I - k M_Z)Y``.

    The result is tagged OLS for ``k = 0``, TSLS for ``k = 1`` and
    KCLASS otherwise; :func:`fit_liml` retags its own fit as LIML.

    :raises RankDeficientDesign: if the normal matrix is singular.
    """
    if not isinstance(spec, KClassSpec):
        spec = KClassSpec(spec)
    kappa = spec.kappa
    # X'(I - k M_Z)X = (P_Z X)'(P_Z X) + (1 - k)(M_Z X)'(M_Z X)
    pz_x = d.projection.apply(d.x)
    mz_x = d.x - pz_x
    mz_y = d.projection.annihilate(d.y)
    a = pz_x.T @ pz_x + (1.0 - kappa) * (mz_x.T @ mz_x)
    b = pz_x.T @ d.y + (1.0 - kappa) * (mz_x.T @ mz_y)
    beta, a_inv = _solve_gram((a + a.T) / 2.0, b)
    sigma2 = _residual_variance(d, beta)
    se = np.sqrt(sigma2 * np.abs(np.diag(a_inv)))
    if kappa == 0:
        tag = OLS
    elif kappa == 1:
        tag = TSLS
    else:
        tag = KCLASS
    return EstimateResult(tag, beta, se, sigma2,
                          kappa=kappa if tag == KCLASS else None,
                          names=d.x_names)


def liml_kappa(d):
    """
    The LIML ``kappa``: the smallest eigenvalue of
    ``W^{-1/2} (Y*'M_{X0} Y*) W^{-1/2}`` with ``W = Y*'M_Z Y*`` and
    ``Y* = [Y X1]``. It is at least one because span(X0) lies in
    span(Z).

    When ``Y*`` lies in the span of the instruments (a noiseless
    design) the ratio is 0/0 and every ``kappa`` gives the same
    estimate; we return 1. When only ``X1`` does (an instrument equal
    to the regressor, say) ``W`` is singular and, with the outcome
    coefficient fixed at one, the minimum is
    ``||M_X Y||^2 / ||M_Z Y||^2``, which is 1 when ``Z`` spans no
    more than ``X``.

    :raises SingularGram: if ``W`` is not positive definite.
    """
    ystar = np.column_stack([d.y, d.endog])
    mz_ystar = d.projection.annihilate(ystar)
    if np.linalg.norm(mz_ystar) <= RANK_TOL * max(np.linalg.norm(ystar), 1.0):
        logger.debug("Endogenous block lies in the instrument span; using kappa=1")
        return 1.0
    mz_endog = mz_ystar[:, 1:]
    if np.linalg.norm(mz_endog) <= RANK_TOL * max(np.linalg.norm(d.endog), 1.0):
        logger.debug("Endogenous regressors lie in the instrument span")
        mx_y = Projection(d.x, error=RankDeficientDesign).annihilate(d.y)
        mz_y = mz_ystar[:, 0]
        return max(float(mx_y @ mx_y) / float(mz_y @ mz_y), 1.0)
    gram_z = mz_ystar.T @ mz_ystar
    mx0_ystar = d.exog_projection.annihilate(ystar)
    gram_x0 = mx0_ystar.T @ mx0_ystar
    root = inv_sqrth((gram_z + gram_z.T) / 2.0)
    kappa = smallest_eigenvalue(root @ gram_x0 @ root)
    if kappa < 1 - 1e-10:
        logger.warning("LIML kappa %r is below one; instruments may not contain X0", kappa)
    return kappa


@_estimator('liml')
def fit_liml(d):
    """
    Limited-information maximum likelihood: the k-class estimator at
    :func:`liml_kappa`. The result records ``kappa``.
    """
    kappa = liml_kappa(d)
    result = fit_kclass(d, KClassSpec(max(kappa, 0.0)))
    result.estimator = LIML
    result.kappa = kappa
    return result


def _check_leverages(leverages):
    worst = int(np.argmax(leverages))
    if leverages[worst] >= 1 - LEVERAGE_TOL:
        raise LeverageOne("Observation %d has leverage %r" % (worst, leverages[worst]), worst)
    if leverages[worst] > 0.99:
        logger.warning("Observation %d has leverage %r; JIVE will be unstable",
                       worst, leverages[worst])


def jackknife_instrument_naive(d):
    """
    Leave-one-out first-stage fits by brute force: for each ``i``,
    regress ``X1`` on ``Z`` without row ``i`` and predict row ``i``.
    Exogenous columns are returned unchanged.
    """
    xhat = np.array(d.x, dtype=float)
    if d.l_endog == 0:
        return xhat
    rows = np.arange(d.n)
    endog = d.endog
    for i in range(d.n):
        keep = rows != i
        try:
            pi_i = Projection(d.z[keep], error=LeverageOne).coefficients(endog[keep])
        except LeverageOne as ex:
            ex.index = i
            raise
        xhat[i, d.m:] = d.z[i] @ pi_i
    return xhat


def jackknife_instrument(d):
    """
    Leave-one-out first-stage fits through the leverage identity::

        Z_i pi(i) = (Z_i pi_hat - h_i X_i) / (1 - h_i)

    Exogenous columns are returned unchanged.
    """
    xhat = np.array(d.x, dtype=float)
    if d.l_endog == 0:
        return xhat
    h = d.projection.leverages
    _check_leverages(h)
    endog = d.endog
    fitted = d.projection.apply(endog)
    xhat[:, d.m:] = (fitted - h[:, np.newaxis] * endog) / (1.0 - h)[:, np.newaxis]
    return xhat


def fit_jive(d, method=ACCELERATED):
    """
    The jackknife IV estimator ``(Xhat'X)^{-1} Xhat'Y`` where row ``i``
    of ``Xhat`` is the first-stage prediction from all observations
    except ``i``.

    Standard errors use the sandwich
    ``sigma2 (Xhat'X)^{-1} (Xhat'Xhat) (X'Xhat)^{-1}``.

    :param method: ``'accelerated'`` (default) uses the leverage
        identity; ``'naive'`` refits the first stage N times.
    :raises LeverageOne: if some leave-one-out first stage is not
        identified.
    :raises RankDeficientDesign: if ``Xhat'X`` is singular.
    """
    if method == ACCELERATED:
        xhat = jackknife_instrument(d)
    elif method == NAIVE:
        xhat = jackknife_instrument_naive(d)
    else:
        raise ValueError("Unknown JIVE method %r" % (method,))
    cross = xhat.T @ d.x
    if not np.all(np.isfinite(cross)) or np.linalg.cond(cross) > GRAM_COND_LIMIT:
        raise RankDeficientDesign("Xhat'X is numerically singular")
    cross_inv = linalg.inv(cross)
    beta = cross_inv @ (xhat.T @ d.y)
    sigma2 = _residual_variance(d, beta)
    cov = sigma2 * cross_inv @ (xhat.T @ xhat) @ cross_inv.T
    se = np.sqrt(np.abs(np.diag(cov)))
    return EstimateResult(JIVE, beta, se, sigma2, fitted_instrument=xhat, names=d.x_names)


@_estimator('jive')
def fit_jive_accelerated(d):
    return fit_jive(d, ACCELERATED)


@_estimator('jive-naive')
def fit_jive_naive(d):
    return fit_jive(d, NAIVE)
