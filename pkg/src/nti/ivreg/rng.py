#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Reproducible random streams for Monte-Carlo replications.

Replication ``r`` of a run with master seed ``s`` draws from a Philox
(counter-based) generator keyed by :func:`derive_seed`, a 64-bit
digest of ``(s, r)`` computed by :class:`numpy.random.SeedSequence`.
Streams therefore depend only on ``(s, r)``, never on which worker
process runs the replication or in what order.

.. doctest::

   >>> from nti.ivreg.rng import derive_seed, rng_for
   >>> derive_seed(42, 0) == derive_seed(42, 0)
   True
   >>> derive_seed(42, 0) == derive_seed(42, 1)
   False
   >>> a = rng_for(derive_seed(42, 3)).standard_normal(3)
   >>> b = rng_for(derive_seed(42, 3)).standard_normal(3)
   >>> bool((a == b).all())
   True
"""

__docformat__ = "restructuredtext en"

import numpy as np

#: Seeds are unsigned 64-bit integers.
MAX_SEED = 2 ** 64 - 1


def _check_seed(seed, name='seed'):
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError("%s must be an unsigned 64-bit integer, got %r" % (name, seed))
    return seed


def derive_seed(master_seed, replication):
    """
    The 64-bit seed of replication *replication* under *master_seed*.
    """
    master_seed = _check_seed(master_seed, 'master_seed')
    sequence = np.random.SeedSequence(master_seed, spawn_key=(int(replication),))
    return int(sequence.generate_state(1, np.uint64)[0])


def rng_for(seed):
    """
    A :class:`numpy.random.Generator` over a Philox bit generator
    keyed by *seed*.
    """
    return np.random.Generator(np.random.Philox(_check_seed(seed)))
