#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import print_function, absolute_import, division
__docformat__ = "restructuredtext en"

# disable: accessing protected members, too many methods
# pylint: disable=W0212,R0904

import doctest
import unittest

import numpy as np
from scipy import stats

from hamcrest import is_
from hamcrest import none
from hamcrest import calling
from hamcrest import raises
from hamcrest import contains_exactly
from hamcrest import close_to
from hamcrest import assert_that
from hamcrest import has_properties

from nti.testing.matchers import verifiably_provides

from nti.ivreg.dataset import build_dataset

from nti.ivreg.diagnostics import CRITICAL_VALUES
from nti.ivreg.diagnostics import ConfidenceSet
from nti.ivreg.diagnostics import CriticalValue
from nti.ivreg.diagnostics import CriticalValueTable
from nti.ivreg.diagnostics import Grid
from nti.ivreg.diagnostics import ar_confidence_set
from nti.ivreg.diagnostics import ar_statistic
from nti.ivreg.diagnostics import ar_statistics
from nti.ivreg.diagnostics import concentration_parameter
from nti.ivreg.diagnostics import critical_value_lookup
from nti.ivreg.diagnostics import default_grid
from nti.ivreg.diagnostics import first_stage_coefficients
from nti.ivreg.diagnostics import first_stage_f
from nti.ivreg.diagnostics import predict_bias_buse
from nti.ivreg.diagnostics import predict_bias_group_asym
from nti.ivreg.diagnostics import predict_inconsistency

from nti.ivreg.errors import DegenerateFirstStage
from nti.ivreg.errors import DegenerateResidual
from nti.ivreg.errors import InvalidGrid
from nti.ivreg.errors import MultipleEndogenous
from nti.ivreg.errors import NoExcludedInstruments
from nti.ivreg.errors import NonpositiveVariance

from nti.ivreg.estimators import fit_2sls

from nti.ivreg.interfaces import IDiagnosticsReport
from nti.ivreg.interfaces import INDETERMINATE
from nti.ivreg.interfaces import STRONG
from nti.ivreg.interfaces import WEAK

from nti.ivreg.rng import rng_for

from nti.ivreg.tests import random_dataset


def _rss(a, v):
    coef = np.linalg.lstsq(a, v, rcond=None)[0]
    resid = v - a @ coef
    return float(resid @ resid)


class TestCriticalValues(unittest.TestCase):

    def test_rows(self):
        assert_that(CRITICAL_VALUES.items(),
                    contains_exactly((3, (3.71, 9.08)), (5, (5.82, 10.83)),
                                     (10, (7.41, 11.49)), (15, (7.94, 11.51))))
        assert_that(critical_value_lookup(5), is_(CriticalValue(5.82, 10.83)))
        assert_that(critical_value_lookup(7), is_(none()))
        assert_that(7 in CRITICAL_VALUES, is_(False))
        assert_that(list(CRITICAL_VALUES), is_([3, 5, 10, 15]))

    def test_monotone(self):
        with self.assertRaises(ValueError):
            CriticalValueTable({3: (3.71, 9.08), 5: (5.82, 8.0)})


class TestFirstStage(unittest.TestCase):

    def test_rss_ratio(self):
        d = random_dataset(n=8, k_excluded=2, pi=0.7, seed=2)
        x1 = d.endog[:, 0]
        rss_u = _rss(d.z, x1)
        rss_r = _rss(d.exog, x1)
        expected = ((rss_r - rss_u) / 2) / (rss_u / (8 - 3))
        report = first_stage_f(d)
        assert_that(report.f_stat, is_(close_to(expected, 1e-8)))
        assert_that(report.r2, is_(close_to(1 - rss_u / rss_r, 1e-10)))
        assert_that(report.adj_r2, is_(close_to(1 - (rss_u / 5) / (rss_r / 7), 1e-10)))
        assert_that(report.mu2_over_k_hat, is_(close_to(max(expected - 1, 0), 1e-8)))
        assert_that(report.p_value, is_(close_to(stats.f.sf(expected, 2, 5), 1e-8)))
        assert_that(report, verifiably_provides(IDiagnosticsReport))

    def test_without_exogenous(self):
        d = random_dataset(n=30, k_excluded=3, intercept=False, seed=8)
        x1 = d.endog[:, 0]
        rss_u = _rss(d.z, x1)
        rss_r = float(x1 @ x1)
        expected = ((rss_r - rss_u) / 3) / (rss_u / 27)
        assert_that(first_stage_f(d).f_stat, is_(close_to(expected, 1e-8)))

    def test_verdicts(self):
        strong = first_stage_f(random_dataset(n=200, k_excluded=3, pi=1.0, seed=4))
        assert_that(strong, has_properties(verdict=STRONG, threshold_used=9.08, k_excluded=3))
        weak = first_stage_f(random_dataset(n=200, k_excluded=3, pi=0.0, seed=4))
        assert_that(weak, has_properties(verdict=WEAK, threshold_used=9.08))
        no_row = first_stage_f(random_dataset(n=200, k_excluded=6, pi=0.0, seed=4),
                               rule_of_thumb=False)
        assert_that(no_row, has_properties(verdict=INDETERMINATE, threshold_used=None))
        assert_that(no_row.table_row, is_(none()))

    def test_reparameterized_instruments(self):
        d = random_dataset(n=60, k_excluded=3, pi=0.4, seed=22)
        rng = rng_for(23)
        mix = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        shift = rng.standard_normal(3)
        z1 = d.z[:, 1:] @ mix + shift
        remixed = d.replace(z=np.column_stack([d.z[:, 0], z1]))
        before, after = first_stage_f(d).f_stat, first_stage_f(remixed).f_stat
        assert_that(after, is_(close_to(before, 1e-9 * before)))

    def test_perfect_first_stage(self):
        n = 10
        rng = rng_for(3)
        z = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        x1 = z @ [0.0, 1.0, 2.0]
        d = build_dataset(rng.standard_normal(n), np.column_stack([np.ones(n), x1]), z, n_exog=1)
        report = first_stage_f(d)
        assert_that(report, has_properties(f_stat=np.inf, r2=1.0, adj_r2=1.0,
                                           mu2_over_k_hat=np.inf, verdict=STRONG,
                                           k_excluded=2, threshold_used=10.0))
        assert_that(report.p_value, is_(0.0))
        assert_that(report, verifiably_provides(IDiagnosticsReport))

    def test_perfect_first_stage_with_instrument_equal_to_regressor(self):
        d = random_dataset(n=50, k_excluded=1, seed=21)
        d = build_dataset(d.y, d.x, d.x, n_exog=1)
        assert_that(first_stage_f(d), has_properties(f_stat=np.inf, r2=1.0, verdict=STRONG))

    def test_degenerate(self):
        n = 10
        rng = rng_for(3)
        z = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        x = np.column_stack([np.ones(n), np.full(n, 3.0)])
        d = build_dataset(rng.standard_normal(n), x, z, n_exog=1)
        assert_that(calling(first_stage_f).with_args(d), raises(DegenerateResidual))

    def test_shape_errors(self):
        rng = rng_for(5)
        z = rng.standard_normal((10, 3))
        d = build_dataset(rng.standard_normal(10), rng.standard_normal((10, 2)), z, n_exog=0)
        assert_that(calling(first_stage_f).with_args(d), raises(MultipleEndogenous))
        ones = np.ones(10)
        x = np.column_stack([ones, z[:, 0]])
        d = build_dataset(rng.standard_normal(10), x, x, n_exog=2)
        assert_that(calling(first_stage_f).with_args(d), raises(MultipleEndogenous))

    def test_coefficients(self):
        d = random_dataset(n=50, k_excluded=3, seed=6)
        frame = first_stage_coefficients(d)
        assert_that(list(frame.columns), is_(['instrument', 'coef', 'stderr', 't']))
        assert_that(list(frame['instrument']), is_(list(d.z_names[1:])))
        coef = np.linalg.lstsq(d.z, d.endog[:, 0], rcond=None)[0]
        assert_that(np.allclose(frame['coef'], coef[1:]), is_(True))
        assert_that(np.allclose(frame['t'], frame['coef'] / frame['stderr']), is_(True))


class TestBiasPredictors(unittest.TestCase):

    def test_concentration_parameter(self):
        rng = rng_for(9)
        z = rng.standard_normal((200, 1))
        mu2 = concentration_parameter([0.3], z, 0.25)
        assert_that(mu2, is_(close_to(0.09 * float(z[:, 0] @ z[:, 0]) / 0.25, 1e-9)))
        with self.assertRaises(NonpositiveVariance):
            concentration_parameter([0.3], z, 0.0)

    def test_buse(self):
        z = np.eye(3)
        assert_that(predict_bias_buse(0.5, [1.0, 1.0, 0.0], z, 4), is_(close_to(0.5, 1e-12)))
        assert_that(predict_bias_buse(0.5, [1.0, 1.0, 0.0], z, 2), is_(0.0))
        with self.assertRaises(DegenerateFirstStage):
            predict_bias_buse(0.5, [0.0, 0.0, 0.0], z, 3)

    def test_group_asymptotic(self):
        assert_that(predict_bias_group_asym(0.2, 0.25, 0.0), is_(close_to(0.8, 1e-12)))
        with self.assertRaises(NonpositiveVariance):
            predict_bias_group_asym(0.2, 0.0, 1.0)

    def test_inconsistency(self):
        assert_that(predict_inconsistency(0.1, 0.5), is_(close_to(0.2, 1e-12)))
        with self.assertRaises(NonpositiveVariance):
            predict_inconsistency(0.1, 0.0)


class TestAndersonRubin(unittest.TestCase):

    def test_quadratic_form_oracle(self):
        d = random_dataset(n=10, k_excluded=3, intercept=False, seed=12)
        pz = d.z @ np.linalg.inv(d.z.T @ d.z) @ d.z.T
        mz = np.eye(10) - pz
        for b in (-1.0, 0.0, 2.0, 3.5):
            u = d.y - d.x[:, 0] * b
            expected = ((u @ pz @ u) / 3) / ((u @ mz @ u) / 7)
            assert_that(ar_statistic(d, b), is_(close_to(expected, 1e-9 * max(1.0, expected))))

    def test_concentrated(self):
        d = random_dataset(n=40, k_excluded=3, seed=13)
        mx0 = np.eye(40) - np.full((40, 40), 1.0 / 40)
        pz = d.z @ np.linalg.inv(d.z.T @ d.z) @ d.z.T
        u = mx0 @ (d.y - d.endog[:, 0] * 1.5)
        expected = ((u @ pz @ u) / 3) / ((u @ (np.eye(40) - pz) @ u) / 36)
        assert_that(ar_statistic(d, 1.5), is_(close_to(expected, 1e-9 * max(1.0, expected))))
        # The exogenous part of a full coefficient vector is ignored.
        assert_that(ar_statistic(d, [99.0, 1.5]), is_(close_to(expected, 1e-9 * max(1.0, expected))))

    def test_common_rescaling(self):
        d = random_dataset(n=40, k_excluded=3, seed=24)
        z = d.z.copy()
        z[:, 0] *= 7.5
        scaled = build_dataset(7.5 * d.y, 7.5 * d.x, z, n_exog=1)
        for b in (-2.0, 0.5, 2.0, 4.0):
            expected = ar_statistic(d, b)
            assert_that(ar_statistic(scaled, b), is_(close_to(expected, 1e-9 * max(1.0, expected))))

    def test_vectorised_matches_pointwise(self):
        d = random_dataset(n=60, k_excluded=4, seed=14)
        betas = np.linspace(-3, 5, 41)
        pointwise = [ar_statistic(d, b) for b in betas]
        assert_that(np.allclose(ar_statistics(d, betas), pointwise, rtol=1e-9), is_(True))

    def test_degenerate(self):
        n = 12
        rng = rng_for(15)
        z = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        x1 = z @ [0.0, 1.0, 1.0]
        y = 2.0 * x1
        d = build_dataset(y, np.column_stack([np.ones(n), x1]), z, n_exog=1)
        assert_that(calling(ar_statistic).with_args(d, 2.0), raises(DegenerateResidual))

    def test_no_excluded(self):
        d = random_dataset(n=10, k_excluded=1)
        d = build_dataset(d.y, d.x[:, :1], d.z[:, :1], n_exog=1)
        assert_that(calling(ar_statistic).with_args(d, []), raises(NoExcludedInstruments))


class TestConfidenceSet(unittest.TestCase):

    def test_grid(self):
        grid = Grid(0.0, 1.0, 0.25)
        assert_that(grid.nodes.tolist(), is_([0.0, 0.25, 0.5, 0.75, 1.0]))
        around = Grid.around(2.0, 1.0, 5)
        assert_that(np.allclose(around.nodes, [1.0, 1.5, 2.0, 2.5, 3.0]), is_(True))
        for args in ((0.0, 1.0, 0.0), (1.0, 0.0, 0.1), (0.0, np.inf, 0.1)):
            assert_that(calling(Grid).with_args(*args), raises(InvalidGrid))
        assert_that(calling(Grid.around).with_args(0.0, 1.0, 1), raises(InvalidGrid))

    def test_merge(self):
        nodes = np.arange(7.0)
        stats_ = np.array([5.0, 1.0, 1.0, 5.0, 1.0, 5.0, 1.0])
        result = ConfidenceSet(nodes, stats_, 2.0, 0.95)
        assert_that(result.intervals, is_([(1.0, 2.0), (4.0, 4.0), (6.0, 6.0)]))
        assert_that(result, has_properties(empty=False, unbounded=False))
        assert_that(result.contains(1.5), is_(True))
        assert_that(result.contains(3.0), is_(False))
        assert_that(ConfidenceSet(nodes, np.full(7, 5.0), 2.0, 0.95).empty, is_(True))
        assert_that(ConfidenceSet(nodes, np.zeros(7), 2.0, 0.95).unbounded, is_(True))

    def test_inversion_matches_pointwise(self):
        d = random_dataset(n=100, k_excluded=3, pi=0.3, seed=16)
        result = ar_confidence_set(d, 0.05, (-2.0, 6.0, 0.05))
        critical = stats.f.ppf(0.95, 3, 96)
        assert_that(result.critical_value, is_(close_to(critical, 1e-12)))
        for node, accepted in zip(result.nodes, result.accepted):
            assert_that(bool(accepted), is_(ar_statistic(d, node) <= critical))

    def test_strong_instruments_bounded(self):
        d = random_dataset(n=400, k_excluded=1, pi=1.0, seed=17)
        result = ar_confidence_set(d)
        assert_that(result.unbounded, is_(False))
        assert_that(len(result.intervals), is_(1))
        assert_that(result.contains(fit_2sls(d).coef()), is_(True))

    def test_irrelevant_instruments_unbounded(self):
        found = False
        for seed in range(20):
            d = random_dataset(n=100, k_excluded=1, pi=0.0, seed=seed)
            result = ar_confidence_set(d, 0.05, (-1000.0, 1000.0, 1.0))
            found = found or result.unbounded
        assert_that(found, is_(True))

    def test_default_grid(self):
        d = random_dataset(n=100, k_excluded=3, seed=18)
        tsls = fit_2sls(d)
        grid = default_grid(d, nodes=11, width=5.0)
        assert_that(len(grid.nodes), is_(11))
        assert_that(grid.nodes[5], is_(close_to(tsls.coef(), 1e-9)))
        assert_that(grid.hi - grid.lo, is_(close_to(10 * tsls.stderr(), 1e-9)))

    def test_level_is_test_size(self):
        d = random_dataset(n=200, k_excluded=3, pi=0.5, seed=19)
        grid = (-3.0, 5.0, 0.01)
        default = ar_confidence_set(d, grid=grid)
        assert_that(default.critical_value, is_(close_to(stats.f.ppf(0.95, 3, 196), 1e-12)))
        assert_that(default.level, is_(0.05))
        narrow = ar_confidence_set(d, 0.5, grid)
        assert_that(narrow.critical_value, is_(close_to(stats.f.ppf(0.5, 3, 196), 1e-12)))
        # a larger test size never accepts more nodes
        assert_that(bool((narrow.accepted <= default.accepted).all()), is_(True))
        assert_that(narrow.accepted_fraction < default.accepted_fraction, is_(True))

    def test_bad_level(self):
        with self.assertRaises(ValueError):
            ar_confidence_set(random_dataset(), 1.5, (0.0, 1.0, 0.1))


def load_tests(_loader, standard_tests, _pattern):
    from nti.ivreg import diagnostics
    standard_tests.addTests(doctest.DocTestSuite(diagnostics))
    return standard_tests


if __name__ == '__main__':
    unittest.main()
