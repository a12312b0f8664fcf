#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
The data objects shared by all estimators and diagnostics.

An :class:`IVDataset` holds the outcome ``y``, the regressors ``x`` and
the instruments ``z`` of the model::

    Y = X beta + epsilon
    X = Z pi   + eta

The first ``n_exog`` (M) columns of ``x`` are included exogenous
regressors and must be repeated, bit for bit, as the first M columns
of ``z``; their rows of ``eta`` are zero. The intercept is not implicit:
include a column of ones when you want one.

.. doctest::

   >>> import numpy as np
   >>> from nti.ivreg.dataset import build_dataset
   >>> d = build_dataset([1., 2., 3., 4.], [1., 2., 3., 4.],
   ...                   [[1., 0.], [1., 1.], [1., 0.], [1., 1.]], n_exog=0)
   >>> d.n, d.l, d.k, d.m
   (4, 1, 2, 0)
"""

__docformat__ = "restructuredtext en"

import logging

import numpy as np

from zope.cachedescriptors.property import Lazy
from zope.interface import implementer

from nti.ivreg.errors import DimensionMismatch
from nti.ivreg.errors import ExogenousMismatch
from nti.ivreg.errors import NonpositiveVariance
from nti.ivreg.errors import InvalidCovariance
from nti.ivreg.interfaces import IIVDataset
from nti.ivreg.interfaces import IStructuralError
from nti.ivreg.linalg import Projection

logger = logging.getLogger(__name__)


def _frozen(a):
    a = np.array(a, dtype=float, order='F', copy=True)
    a.flags.writeable = False
    return a


@implementer(IIVDataset)
class IVDataset(object):
    """
    A validated, immutable ``(Y, X, Z)`` triple.

    Use :func:`build_dataset` to construct one. The arrays are
    read-only; derived factorizations are computed on first use and
    cached.
    """

    def __init__(self, y, x, z, n_exog, x_names=None, z_names=None):
        self.y = _frozen(y)
        self.x = _frozen(x)
        self.z = _frozen(z)
        self.n_exog = int(n_exog)
        self.x_names = tuple(x_names) if x_names else tuple('x%d' % i for i in range(self.l))
        self.z_names = tuple(z_names) if z_names else tuple('z%d' % i for i in range(self.k))

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def l(self):
        return self.x.shape[1]

    @property
    def k(self):
        return self.z.shape[1]

    @property
    def m(self):
        return self.n_exog

    @property
    def l_endog(self):
        return self.l - self.n_exog

    @property
    def k_excluded(self):
        return self.k - self.n_exog

    @property
    def exog(self):
        "The included exogenous columns X0 (N x M)."
        return self.x[:, :self.n_exog]

    @property
    def endog(self):
        "The endogenous columns X1 (N x (L - M))."
        return self.x[:, self.n_exog:]

    @property
    def excluded(self):
        "The excluded instruments Z1 (N x (K - M))."
        return self.z[:, self.n_exog:]

    @Lazy
    def projection(self):
        return Projection(self.z)

    @Lazy
    def exog_projection(self):
        return Projection(self.exog)

    def replace(self, **kwargs):
        """
        Return a validated copy with some of ``y``, ``x``, ``z``,
        ``n_exog`` replaced.
        """
        args = dict(y=self.y, x=self.x, z=self.z, n_exog=self.n_exog,
                    column_names=(self.x_names, self.z_names))
        args.update(kwargs)
        return build_dataset(**args)

    def __repr__(self):
        return '<%s N=%d L=%d K=%d M=%d>' % (type(self).__name__, self.n, self.l, self.k, self.m)


def build_dataset(y, x, z, n_exog, column_names=None):
    """
    Validate and return an :class:`IVDataset`.

    One-dimensional *x* or *z* are treated as single columns.

    :param column_names: Optional ``(x_names, z_names)`` pair.
    :raises DimensionMismatch: If shapes do not conform or ``N > K >= L >= 1``
        does not hold.
    :raises RankDeficientInstruments: If *z* does not have full column rank.
    :raises ExogenousMismatch: If the first *n_exog* columns of *x* and *z*
        differ.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y[:, 0]
    if y.ndim != 1:
        raise DimensionMismatch("y must be a vector, got shape %s" % (y.shape,))
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.ndim == 1:
        x = x[:, np.newaxis]
    if z.ndim == 1:
        z = z[:, np.newaxis]
    if x.ndim != 2 or z.ndim != 2:
        raise DimensionMismatch("x and z must be matrices")
    n = y.shape[0]
    if x.shape[0] != n or z.shape[0] != n:
        raise DimensionMismatch("Row counts differ: y %d, x %d, z %d"
                                % (n, x.shape[0], z.shape[0]))
    l, k = x.shape[1], z.shape[1]
    if not n > k >= l >= 1:
        raise DimensionMismatch("Need N > K >= L >= 1, got N=%d K=%d L=%d" % (n, k, l))
    n_exog = int(n_exog)
    if not 0 <= n_exog <= min(l, k):
        raise DimensionMismatch("n_exog=%d outside [0, %d]" % (n_exog, min(l, k)))
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
        raise DimensionMismatch("Data contain non-finite values")
    if not np.array_equal(x[:, :n_exog], z[:, :n_exog]):
        raise ExogenousMismatch("The first %d columns of x and z differ" % n_exog)

    x_names = z_names = None
    if column_names is not None:
        x_names, z_names = column_names
        if x_names is not None and len(x_names) != l:
            raise DimensionMismatch("%d regressor names for %d columns" % (len(x_names), l))
        if z_names is not None and len(z_names) != k:
            raise DimensionMismatch("%d instrument names for %d columns" % (len(z_names), k))

    dataset = IVDataset(y, x, z, n_exog, x_names, z_names)
    # Factor now so that rank deficiency is reported at construction.
    dataset.projection # pylint:disable=pointless-statement
    return dataset


@implementer(IStructuralError)
class StructuralError(object):
    """
    Covariance of ``(epsilon, eta)`` for one endogenous regressor.

    >>> from nti.ivreg.dataset import StructuralError
    >>> err = StructuralError.from_rho(1.0, 0.25, 0.5)
    >>> round(err.sigma_eps_eta, 12)
    0.25
    >>> err.covariance.tolist()
    [[1.0, 0.25], [0.25, 0.25]]
    """

    def __init__(self, sigma_eps2, sigma_eta2, sigma_eps_eta):
        if sigma_eps2 <= 0 or sigma_eta2 <= 0:
            raise NonpositiveVariance("Error variances must be positive, got %r and %r"
                                      % (sigma_eps2, sigma_eta2))
        self.sigma_eps2 = float(sigma_eps2)
        self.sigma_eta2 = float(sigma_eta2)
        self.sigma_eps_eta = float(sigma_eps_eta)
        rho = self.sigma_eps_eta / np.sqrt(self.sigma_eps2 * self.sigma_eta2)
        if abs(rho) > 1 + 1e-12:
            raise InvalidCovariance("Correlation %r outside [-1, 1]" % (rho,))
        self.rho = float(np.clip(rho, -1.0, 1.0))

    @classmethod
    def from_rho(cls, sigma_eps2, sigma_eta2, rho):
        return cls(sigma_eps2, sigma_eta2, rho * np.sqrt(sigma_eps2 * sigma_eta2))

    @classmethod
    def from_covariance(cls, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return cls(sigma[0, 0], sigma[1, 1], sigma[0, 1])

    @property
    def covariance(self):
        return np.array([[self.sigma_eps2, self.sigma_eps_eta],
                         [self.sigma_eps_eta, self.sigma_eta2]])
