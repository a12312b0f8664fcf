#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import print_function, absolute_import
__docformat__ = "restructuredtext en"

# disable: accessing protected members, too many methods
# pylint: disable=W0212,R0904

import numpy as np

from nti.ivreg.dataset import build_dataset
from nti.ivreg.rng import rng_for


def random_dataset(n=30, k_excluded=3, pi=0.5, rho=0.5, seed=1, intercept=True):
    """
    A single-endogenous dataset with normal instruments and
    correlated errors, for tests.
    """
    rng = rng_for(seed)
    excluded = rng.standard_normal((n, k_excluded))
    errors = rng.multivariate_normal([0., 0.], [[1., rho], [rho, 1.]], size=n)
    x1 = excluded @ np.full(k_excluded, pi) + errors[:, 1]
    y = 1.0 + 2.0 * x1 + errors[:, 0]
    if intercept:
        ones = np.ones(n)
        return build_dataset(y, np.column_stack([ones, x1]),
                             np.column_stack([ones, excluded]), n_exog=1)
    return build_dataset(y, x1, excluded, n_exog=0)
