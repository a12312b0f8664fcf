#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Factorization-backed least squares helpers.

The projection onto the column span of a matrix is never formed as a
dense N x N matrix; instead we keep a (column-pivoted) thin QR
factorization and apply ``Q Q'`` to whatever needs projecting.

.. doctest::

   >>> import numpy as np
   >>> from nti.ivreg.linalg import Projection
   >>> z = np.array([[1., 0.], [1., 1.], [1., 0.], [1., 1.]])
   >>> p = Projection(z)
   >>> p.rank
   2
   >>> np.round(p.apply(np.array([1., 2., 3., 4.])), 10).tolist()
   [2.0, 3.0, 2.0, 3.0]
   >>> round(float(p.leverages.sum()), 10)
   2.0
"""

__docformat__ = "restructuredtext en"

import numpy as np
from scipy import linalg

from zope.cachedescriptors.property import Lazy

from nti.ivreg.errors import RankDeficientInstruments
from nti.ivreg.errors import SingularGram

#: A factor diagonal at or below this fraction of the largest one
#: makes the matrix rank deficient.
RANK_TOL = 1e-10


def _as_matrix(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, np.newaxis]
    return a


class Projection(object):
    """
    The orthogonal projection ``P_A`` onto the columns of *a*, backed by
    a thin, column-pivoted QR factorization.

    :param error: The exception class raised when *a* is rank
        deficient. Defaults to :class:`.RankDeficientInstruments`.
    """

    def __init__(self, a, error=RankDeficientInstruments, tol=RANK_TOL):
        a = _as_matrix(a)
        self.shape = a.shape
        if a.shape[1] == 0:
            self._q = np.zeros((a.shape[0], 0))
            self._r = np.zeros((0, 0))
            self._perm = np.zeros(0, dtype=int)
            return
        if a.shape[0] < a.shape[1]:
            ex = error("%d columns cannot have full rank in %d rows" % (a.shape[1], a.shape[0]))
            ex.effective_rank = a.shape[0]
            raise ex
        q, r, perm = linalg.qr(a, mode='economic', pivoting=True)
        diag = np.abs(np.diag(r))
        largest = diag.max() if diag.size else 0.0
        effective = int(np.sum(diag > tol * largest)) if largest > 0 else 0
        if effective < a.shape[1]:
            ex = error("Matrix of %d columns has numerical rank %d" % (a.shape[1], effective))
            ex.effective_rank = effective
            raise ex
        self._q = q
        self._r = r
        self._perm = perm

    @property
    def rank(self):
        return self._q.shape[1]

    def apply(self, v):
        """
        Return ``P_A v``. *v* may be a vector or a matrix; the result
        has the same shape.
        """
        v = np.asarray(v, dtype=float)
        return self._q @ (self._q.T @ v)

    def annihilate(self, v):
        """
        Return ``M_A v = v - P_A v``.
        """
        v = np.asarray(v, dtype=float)
        return v - self.apply(v)

    def coefficients(self, v):
        """
        Least-squares coefficients ``b`` minimizing ``||v - A b||``.
        """
        v = np.asarray(v, dtype=float)
        solved = linalg.solve_triangular(self._r, self._q.T @ v)
        result = np.empty_like(solved)
        result[self._perm] = solved
        return result

    @Lazy
    def gram_inverse(self):
        """
        ``(A'A)^{-1}`` computed from the triangular factor.
        """
        k = self._r.shape[0]
        r_inv = linalg.solve_triangular(self._r, np.eye(k))
        inner = r_inv @ r_inv.T
        result = np.empty_like(inner)
        result[np.ix_(self._perm, self._perm)] = inner
        return result

    @Lazy
    def leverages(self):
        """
        The diagonal of ``P_A``; the leverages sum to the rank.
        """
        return np.einsum('ij,ij->i', self._q, self._q)


def projection_apply(z, v):
    """
    Apply ``P_Z`` to *v* without forming the N x N projection matrix.

    :raises RankDeficientInstruments: If *z* does not have full column rank.
    """
    return Projection(z).apply(v)


def annihilator_apply(z, v):
    """
    Apply ``M_Z = I - P_Z`` to *v*.
    """
    return Projection(z).annihilate(v)


def inv_sqrth(a, error=SingularGram, tol=RANK_TOL):
    """
    The inverse symmetric square root of a symmetric positive definite
    matrix, through its eigendecomposition.

    >>> import numpy as np
    >>> from nti.ivreg.linalg import inv_sqrth
    >>> bool(np.allclose(inv_sqrth(np.array([[4., 0.], [0., 9.]])), [[0.5, 0.], [0., 1. / 3]]))
    True
    """
    a = np.asarray(a, dtype=float)
    vals, vecs = linalg.eigh(a)
    if vals.size == 0 or vals.min() <= tol * max(abs(vals.max()), np.finfo(float).tiny):
        raise error("Matrix is not positive definite (eigenvalues %s)" % (vals,))
    return (vecs / np.sqrt(vals)) @ vecs.T


def smallest_eigenvalue(a):
    """
    The smallest eigenvalue of the symmetric matrix *a*.
    """
    a = np.asarray(a, dtype=float)
    a = (a + a.T) / 2.0
    return float(linalg.eigh(a, eigvals_only=True)[0])
