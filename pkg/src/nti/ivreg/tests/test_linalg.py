#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import print_function, absolute_import, division
__docformat__ = "restructuredtext en"

# disable: accessing protected members, too many methods
# pylint: disable=W0212,R0904

import doctest
import unittest

import numpy as np

from hamcrest import is_
from hamcrest import close_to
from hamcrest import assert_that
from hamcrest import has_property

from nti.ivreg.errors import RankDeficientDesign
from nti.ivreg.errors import RankDeficientInstruments
from nti.ivreg.errors import SingularGram

from nti.ivreg.linalg import Projection
from nti.ivreg.linalg import annihilator_apply
from nti.ivreg.linalg import inv_sqrth
from nti.ivreg.linalg import projection_apply
from nti.ivreg.linalg import smallest_eigenvalue

from nti.ivreg.rng import rng_for


def _dense_projection(z):
    return z @ np.linalg.inv(z.T @ z) @ z.T


class TestProjection(unittest.TestCase):

    def setUp(self):
        rng = rng_for(7)
        self.z = rng.standard_normal((6, 2))
        self.v = rng.standard_normal(6)

    def test_matches_dense_projection(self):
        expected = _dense_projection(self.z) @ self.v
        assert_that(np.max(np.abs(projection_apply(self.z, self.v) - expected)),
                    is_(close_to(0, 1e-10)))

    def test_idempotent(self):
        p = Projection(self.z)
        once = p.apply(self.v)
        twice = p.apply(once)
        assert_that(np.linalg.norm(twice - once), is_(close_to(0, 1e-10 * np.linalg.norm(self.v))))

    def test_annihilator_is_orthogonal(self):
        resid = annihilator_apply(self.z, self.v)
        assert_that(np.max(np.abs(self.z.T @ resid)), is_(close_to(0, 1e-10)))

    def test_matrix_argument_keeps_shape(self):
        v = np.column_stack([self.v, 2 * self.v])
        result = Projection(self.z).apply(v)
        assert_that(result.shape, is_((6, 2)))
        assert_that(np.allclose(result[:, 1], 2 * result[:, 0]), is_(True))

    def test_coefficients_and_gram_inverse(self):
        p = Projection(self.z)
        expected = np.linalg.lstsq(self.z, self.v, rcond=None)[0]
        assert_that(np.allclose(p.coefficients(self.v), expected, atol=1e-10), is_(True))
        assert_that(np.allclose(p.gram_inverse, np.linalg.inv(self.z.T @ self.z)), is_(True))

    def test_leverages(self):
        p = Projection(self.z)
        assert_that(np.allclose(p.leverages, np.diag(_dense_projection(self.z))), is_(True))
        assert_that(float(p.leverages.sum()), is_(close_to(2.0, 1e-10)))

    def test_pivoting_preserves_column_order(self):
        z = np.column_stack([1e-3 * self.z[:, 0], 1e3 * self.z[:, 1]])
        coef = Projection(z).coefficients(z @ np.array([2.0, 3.0]))
        assert_that(np.allclose(coef, [2.0, 3.0]), is_(True))

    def test_rank_deficient(self):
        z = np.column_stack([self.z[:, 0], 2 * self.z[:, 0]])
        with self.assertRaises(RankDeficientInstruments) as exc:
            Projection(z)
        assert_that(exc.exception, has_property('effective_rank', 1))

    def test_more_columns_than_rows(self):
        with self.assertRaises(RankDeficientInstruments):
            Projection(np.ones((2, 3)))

    def test_custom_error(self):
        with self.assertRaises(RankDeficientDesign):
            Projection(np.zeros((4, 1)), error=RankDeficientDesign)


class TestEigen(unittest.TestCase):

    def test_inv_sqrth(self):
        a = np.array([[2.0, 0.5], [0.5, 1.0]])
        root = inv_sqrth(a)
        assert_that(np.allclose(root @ a @ root, np.eye(2)), is_(True))

    def test_inv_sqrth_singular(self):
        with self.assertRaises(SingularGram):
            inv_sqrth(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_smallest_eigenvalue(self):
        assert_that(smallest_eigenvalue([[3.0, 1.0], [1.0, 3.0]]), is_(close_to(2.0, 1e-12)))


def load_tests(_loader, standard_tests, _pattern):
    from nti.ivreg import linalg
    standard_tests.addTests(doctest.DocTestSuite(linalg))
    return standard_tests


if __name__ == '__main__':
    unittest.main()
