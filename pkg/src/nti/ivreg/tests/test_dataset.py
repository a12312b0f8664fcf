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
from hamcrest import has_properties

from nti.testing.matchers import verifiably_provides

from nti.ivreg.dataset import StructuralError
from nti.ivreg.dataset import build_dataset

from nti.ivreg.errors import DimensionMismatch
from nti.ivreg.errors import ExogenousMismatch
from nti.ivreg.errors import InvalidCovariance
from nti.ivreg.errors import NonpositiveVariance
from nti.ivreg.errors import RankDeficientInstruments

from nti.ivreg.interfaces import IIVDataset
from nti.ivreg.interfaces import IStructuralError

from nti.ivreg.tests import random_dataset


class TestBuildDataset(unittest.TestCase):

    def test_shapes(self):
        d = random_dataset(n=20, k_excluded=3)
        assert_that(d, has_properties(n=20, l=2, k=4, m=1, l_endog=1, k_excluded=3))
        assert_that(d.exog.shape, is_((20, 1)))
        assert_that(d.endog.shape, is_((20, 1)))
        assert_that(d.excluded.shape, is_((20, 3)))
        assert_that(d, verifiably_provides(IIVDataset))

    def test_arrays_are_read_only(self):
        d = random_dataset()
        with self.assertRaises(ValueError):
            d.y[0] = 1.0

    def test_copies_input(self):
        y = np.arange(5.0)
        d = build_dataset(y, y + 1, np.column_stack([np.ones(5), y ** 2]), n_exog=0)
        y[0] = 100.0
        assert_that(d.y[0], is_(0.0))

    def test_row_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            build_dataset(np.ones(5), np.ones(4), np.ones((5, 2)), n_exog=0)

    def test_order_condition(self):
        rng = np.random.default_rng(0)
        with self.assertRaises(DimensionMismatch):
            # K < L
            build_dataset(rng.standard_normal(5), rng.standard_normal((5, 2)),
                          rng.standard_normal((5, 1)), n_exog=0)
        with self.assertRaises(DimensionMismatch):
            # N == K
            build_dataset(rng.standard_normal(3), rng.standard_normal(3),
                          rng.standard_normal((3, 3)), n_exog=0)

    def test_non_finite(self):
        y = np.array([1.0, np.nan, 2.0, 3.0])
        with self.assertRaises(DimensionMismatch):
            build_dataset(y, np.arange(4.0), np.column_stack([np.ones(4), np.arange(4.0) ** 2]),
                          n_exog=0)

    def test_rank_deficient_instruments(self):
        z = np.column_stack([np.ones(5), 2 * np.ones(5)])
        with self.assertRaises(RankDeficientInstruments):
            build_dataset(np.arange(5.0), np.arange(5.0), z, n_exog=0)

    def test_exogenous_must_match(self):
        d = random_dataset()
        z = np.array(d.z)
        z[0, 0] = 2.0
        with self.assertRaises(ExogenousMismatch):
            build_dataset(d.y, d.x, z, n_exog=1)

    def test_names(self):
        d = random_dataset(k_excluded=2)
        assert_that(d.x_names, is_(('x0', 'x1')))
        d = d.replace(column_names=(('const', 'educ'), ('const', 'q2', 'q3')))
        assert_that(d.x_names, is_(('const', 'educ')))
        assert_that(d.z_names, is_(('const', 'q2', 'q3')))
        with self.assertRaises(DimensionMismatch):
            d.replace(column_names=(('a',), None))

    def test_replace_revalidates(self):
        d = random_dataset()
        with self.assertRaises(DimensionMismatch):
            d.replace(y=np.ones(3))


class TestStructuralError(unittest.TestCase):

    def test_from_rho(self):
        err = StructuralError.from_rho(1.0, 0.9, 0.9)
        assert_that(err.sigma_eps_eta, is_(close_to(0.9 * np.sqrt(0.9), 1e-12)))
        assert_that(err.rho, is_(close_to(0.9, 1e-12)))
        assert_that(err, verifiably_provides(IStructuralError))

    def test_from_covariance(self):
        err = StructuralError.from_covariance([[0.25, 0.2], [0.2, 0.25]])
        assert_that(err.rho, is_(close_to(0.8, 1e-12)))

    def test_invalid(self):
        with self.assertRaises(NonpositiveVariance):
            StructuralError(0.0, 1.0, 0.0)
        with self.assertRaises(InvalidCovariance):
            StructuralError(1.0, 1.0, 1.5)


def load_tests(_loader, standard_tests, _pattern):
    from nti.ivreg import dataset
    standard_tests.addTests(doctest.DocTestSuite(dataset))
    return standard_tests


if __name__ == '__main__':
    unittest.main()
