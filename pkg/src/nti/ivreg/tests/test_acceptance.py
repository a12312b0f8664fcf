#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Full-size Monte-Carlo checks. These take minutes; run them with
``zope-testrunner -a 2``.
"""

from __future__ import print_function, absolute_import, division
__docformat__ = "restructuredtext en"

# disable: accessing protected members, too many methods
# pylint: disable=W0212,R0904

import itertools
import unittest

import numpy as np

from hamcrest import is_
from hamcrest import close_to
from hamcrest import assert_that
from hamcrest import less_than_or_equal_to
from hamcrest import greater_than_or_equal_to

from nti.ivreg.diagnostics import predict_bias_group_asym

from nti.ivreg.estimators import fit_2sls
from nti.ivreg.estimators import fit_liml
from nti.ivreg.estimators import jackknife_instrument
from nti.ivreg.estimators import jackknife_instrument_naive
from nti.ivreg.estimators import liml_kappa

from nti.ivreg.rng import derive_seed
from nti.ivreg.rng import rng_for

from nti.ivreg.simulation import DGPConfig
from nti.ivreg.simulation import REFERENCE_RESULTS
from nti.ivreg.simulation import generate
from nti.ivreg.simulation import model_preset
from nti.ivreg.simulation import population_first_stage_f
from nti.ivreg.simulation import run_mc
from nti.ivreg.simulation import run_sweep

REPS = 5000
SEED = 20240601
WORKERS = 4
ESTIMATORS = ('ols', '2sls', 'liml', 'jive')


def _summaries():
    if not _summaries.cache:
        for model in (1, 2, 3, 4):
            _summaries.cache[model] = run_mc(model_preset(model), REPS,
                                             master_seed=SEED + model, workers=WORKERS)
    return _summaries.cache
_summaries.cache = {}


def _grid_minimum(d, lo=-5.0, hi=5.0, step=1e-3):
    x1 = d.endog[:, 0]
    ey, ex = d.exog_projection.annihilate(d.y), d.exog_projection.annihilate(x1)
    my, mx = d.projection.annihilate(d.y), d.projection.annihilate(x1)
    b = np.arange(lo, hi + step / 2, step)
    top = ey @ ey - 2 * b * (ey @ ex) + b ** 2 * (ex @ ex)
    bottom = my @ my - 2 * b * (my @ mx) + b ** 2 * (mx @ mx)
    return float(np.min(top / bottom))


class TestReferenceTable(unittest.TestCase):

    level = 2

    def test_median_bias(self):
        summaries = _summaries()
        for model, name in itertools.product((1, 2, 3, 4), ('ols', '2sls', 'liml', 'jive')):
            tolerance = 0.06 if model == 2 and name in ('liml', 'jive') else 0.03
            expected = REFERENCE_RESULTS[model][name][0]
            assert_that(summaries[model][name].median_bias, is_(close_to(expected, tolerance)),
                        'model %d %s' % (model, name))

    def test_ols_coverage(self):
        summaries = _summaries()
        for model in (1, 2, 4):
            assert_that(summaries[model]['ols'].coverage95, is_(less_than_or_equal_to(0.01)))
        assert_that(summaries[3]['ols'].coverage95, is_(close_to(0.370, 0.05)))

    def test_conventional_coverage_with_strong_instruments(self):
        summaries = _summaries()
        for model, name in itertools.product((1, 3), ('2sls', 'liml')):
            assert_that(summaries[model][name].coverage95, is_(close_to(0.94, 0.04)),
                        'model %d %s' % (model, name))

    def test_expected_first_stage_f(self):
        cfg = model_preset(1)
        expected = population_first_stage_f(cfg) + 1
        assert_that(expected, is_(73.0))
        assert_that(_summaries()[1].mean_f, is_(close_to(expected, 0.05 * expected)))


class TestApproximations(unittest.TestCase):

    level = 2

    def test_group_asymptotic_bias(self):
        cfg = model_preset(4)
        summary = run_mc(cfg, REPS, ('2sls',), master_seed=SEED, workers=WORKERS)
        predicted = predict_bias_group_asym(cfg.sigma_eps_eta, cfg.sigma_eta2,
                                            population_first_stage_f(cfg))
        assert_that(summary['2sls'].mean_bias, is_(close_to(predicted, 0.25 * predicted)))

    def test_anderson_rubin_size(self):
        for pi in (0.3, 0.1, 0.0):
            cfg = model_preset(1).replace(pi_excluded=(pi,))
            summary = run_mc(cfg, REPS, ('ols',), master_seed=SEED, workers=WORKERS)
            assert_that(summary.ar_rejection_rate, is_(close_to(0.05, 0.01)), 'pi=%s' % pi)


class TestEstimatorIdentities(unittest.TestCase):

    level = 2

    def test_just_identified(self):
        for r in range(1000):
            d = generate(model_preset(1 + r % 2, n=50), derive_seed(SEED, r))
            liml = fit_liml(d)
            assert_that(liml.kappa, is_(close_to(1.0, 1e-8)))
            tsls = fit_2sls(d).beta
            scale = max(1.0, float(np.max(np.abs(tsls))))
            assert_that(float(np.max(np.abs(liml.beta - tsls))), is_(close_to(0, 1e-8 * scale)))

    def test_jive_leave_one_out(self):
        designs = list(itertools.product((2, 7, 16), (25, 200)))
        for r in range(1000):
            k, n = designs[r % len(designs)]
            cfg = DGPConfig.with_equal_pi(1.0, 1.0, 0.0, 0.3, k, [[1.0, 0.5], [0.5, 1.0]], n)
            d = generate(cfg, derive_seed(SEED, r))
            diff = np.max(np.abs(jackknife_instrument(d) - jackknife_instrument_naive(d)))
            assert_that(float(diff), is_(close_to(0, 1e-9)))

    def test_liml_grid_oracle(self):
        for r in range(200):
            cfg = model_preset(3, n=60)
            d = generate(cfg, derive_seed(SEED, r))
            assert_that(liml_kappa(d), is_(close_to(_grid_minimum(d), 1e-4)))


class TestSweepShape(unittest.TestCase):

    level = 2

    def test_monotone(self):
        rho = run_sweep('rho', [0.0, 0.2, 0.4, 0.6, 0.8, 0.95], sizes=(400,), reps=1000,
                        estimators=('ols',), master_seed=SEED, workers=WORKERS)
        assert_that(float(np.min(np.diff(rho['median_bias']))),
                    is_(greater_than_or_equal_to(-0.01)))
        r2 = run_sweep('r2_limit', [0.01, 0.05, 0.1, 0.3, 0.6, 0.9], sizes=(400,), reps=1000,
                       estimators=ESTIMATORS, master_seed=SEED, workers=WORKERS)
        for name in ESTIMATORS:
            biases = r2[r2['estimator'] == name]['median_bias'].to_numpy()
            assert_that(float(np.max(np.diff(biases))), is_(less_than_or_equal_to(0.01)))

    def test_exogenous_row(self):
        rho = run_sweep('rho', [0.0], sizes=(800,), reps=1000, estimators=ESTIMATORS,
                        master_seed=SEED, workers=WORKERS)
        for name, bias in zip(rho['estimator'], rho['median_bias']):
            assert_that(abs(bias), is_(less_than_or_equal_to(0.05)), name)


class TestStreamDisjointness(unittest.TestCase):

    level = 2

    def test_million_first_draws(self):
        count = 10 ** 6
        first = {int(rng_for(derive_seed(SEED, r)).bit_generator.random_raw())
                 for r in range(count)}
        assert_that(len(first), is_(count))


if __name__ == '__main__':
    unittest.main()
