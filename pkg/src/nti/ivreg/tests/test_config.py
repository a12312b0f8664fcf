#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import print_function, absolute_import, division
__docformat__ = "restructuredtext en"

# disable: accessing protected members, too many methods
# pylint: disable=W0212,R0904

import os
import shutil
import tempfile
import unittest

from hamcrest import is_
from hamcrest import calling
from hamcrest import raises
from hamcrest import assert_that
from hamcrest import has_properties

from nti.testing.matchers import verifiably_provides

from nti.ivreg.config import RunSettings
from nti.ivreg.config import load_config
from nti.ivreg.config import resolve_settings

from nti.ivreg.errors import InvalidConfiguration

from nti.ivreg.interfaces import IRunSettings


def _reset_tunables():
    for name in ('WORKERS', 'REPS', 'SWEEP_REPS', 'SEED', 'AR_GRID_NODES',
                 'AR_GRID_WIDTH', 'FORMAT'):
        getattr(RunSettings, name).reset()


class TestRunSettings(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        _reset_tunables()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)
        for name in ('NTI_IVREG_WORKERS', 'NTI_IVREG_FORMAT'):
            os.environ.pop(name, None)
        _reset_tunables()

    def write(self, text):
        path = os.path.join(self.tmpdir, 'ivreg.conf')
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path

    def test_defaults(self):
        settings = RunSettings()
        assert_that(settings, has_properties(workers=1, reps=5000, sweep_reps=1000, seed=42,
                                             ar_grid_nodes=4001, ar_grid_width=50.0,
                                             format='csv'))
        assert_that(settings, verifiably_provides(IRunSettings))

    def test_environment(self):
        os.environ['NTI_IVREG_WORKERS'] = '3'
        os.environ['NTI_IVREG_FORMAT'] = 'xml'
        settings = RunSettings()
        assert_that(settings, has_properties(workers=3, format='csv'))

    def test_invalid(self):
        assert_that(calling(RunSettings).with_args(workers=0), raises(InvalidConfiguration))
        assert_that(calling(RunSettings).with_args(format='xml'), raises(InvalidConfiguration))
        assert_that(calling(RunSettings).with_args(colour='red'), raises(InvalidConfiguration))

    def test_config_file(self):
        path = self.write('workers 4\nsweep-reps 50\nformat json\n')
        assert_that(load_config(path), is_({'workers': 4, 'sweep_reps': 50, 'format': 'json'}))

    def test_precedence(self):
        os.environ['NTI_IVREG_WORKERS'] = '3'
        path = self.write('workers 4\nseed 7\n')
        settings = resolve_settings({'workers': 2, 'seed': None}, path)
        assert_that(settings, has_properties(workers=2, seed=7))
        settings = resolve_settings({'workers': None}, path)
        assert_that(settings, has_properties(workers=4))
        settings = resolve_settings({'workers': None})
        assert_that(settings, has_properties(workers=3))

    def test_bad_config_file(self):
        path = self.write('colour red\n')
        assert_that(calling(load_config).with_args(path), raises(InvalidConfiguration))
        path = self.write('workers 0\n')
        assert_that(calling(resolve_settings).with_args({}, path), raises(InvalidConfiguration))
        missing = os.path.join(self.tmpdir, 'missing.conf')
        assert_that(calling(load_config).with_args(missing), raises(FileNotFoundError))


if __name__ == '__main__':
    unittest.main()
