#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Run settings for the command line.

Each setting is resolved from, in decreasing precedence, a command
line flag, a ZConfig file validated against ``schema.xml``, an
environment variable, and the default:

=================  ==========================  =======
Setting            Environment variable        Default
=================  ==========================  =======
``workers``        ``NTI_IVREG_WORKERS``       1
``reps``           ``NTI_IVREG_REPS``          5000
``sweep_reps``     ``NTI_IVREG_SWEEP_REPS``    1000
``seed``           ``NTI_IVREG_SEED``          42
``ar_grid_nodes``  ``NTI_IVREG_AR_GRID_NODES`` 4001
``ar_grid_width``  ``NTI_IVREG_AR_GRID_WIDTH`` 50
``format``         ``NTI_IVREG_FORMAT``        csv
=================  ==========================  =======

A configuration file uses the dashed key names::

    workers 4
    sweep-reps 500
    format json
"""

__docformat__ = "restructuredtext en"

import logging
import os

import ZConfig

from zope.cachedescriptors.property import Lazy
from zope.interface import implementer

from nti.ivreg.errors import InvalidConfiguration
from nti.ivreg.interfaces import IRunSettings
from nti.ivreg.interfaces import validate_schema
from nti.ivreg.tunables import Tunable

logger = logging.getLogger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(__file__), 'schema.xml')

#: Setting names, in display order.
FIELDS = ('workers', 'reps', 'sweep_reps', 'seed', 'ar_grid_nodes', 'ar_grid_width', 'format')


@implementer(IRunSettings)
class RunSettings(object):
    """
    Validated settings; keyword arguments that are None fall back to
    the environment.
    """

    WORKERS = Tunable(1, 'NTI_IVREG_WORKERS')
    REPS = Tunable(5000, 'NTI_IVREG_REPS')
    SWEEP_REPS = Tunable(1000, 'NTI_IVREG_SWEEP_REPS')
    SEED = Tunable(42, 'NTI_IVREG_SEED', 'seed')
    AR_GRID_NODES = Tunable(4001, 'NTI_IVREG_AR_GRID_NODES')
    AR_GRID_WIDTH = Tunable(50.0, 'NTI_IVREG_AR_GRID_WIDTH', 'float0')
    FORMAT = Tunable('csv', 'NTI_IVREG_FORMAT', 'output-format')

    def __init__(self, **settings):
        unknown = set(settings) - set(FIELDS)
        if unknown:
            raise InvalidConfiguration("Unknown settings %s" % (sorted(unknown),))
        for name in FIELDS:
            value = settings.get(name)
            if value is None:
                value = getattr(self, name.upper())
            setattr(self, name, value)
        self.ar_grid_width = float(self.ar_grid_width)
        validate_schema(IRunSettings, self)

    def as_dict(self):
        return {name: getattr(self, name) for name in FIELDS}

    def __repr__(self):
        return '<%s %s>' % (type(self).__name__,
                            ' '.join('%s=%r' % item for item in self.as_dict().items()))


class _SchemaLoader(object):

    @Lazy
    def schema(self):
        return ZConfig.loadSchema(SCHEMA_PATH)

_LOADER = _SchemaLoader()


def load_config(path):
    """
    The settings present in the ZConfig file *path*, as a dict with
    underscored keys.

    :raises FileNotFoundError: if *path* does not exist.
    :raises InvalidConfiguration: if the file does not match the schema.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        config, _handler = ZConfig.loadConfig(_LOADER.schema, path)
    except ZConfig.ConfigurationError as ex:
        raise InvalidConfiguration("Invalid configuration file %s: %s" % (path, ex)) from ex
    found = {}
    for name in FIELDS:
        value = getattr(config, name, None)
        if value is not None:
            found[name] = value
    return found


def resolve_settings(flags=None, config_path=None):
    """
    Combine *flags* (a mapping whose None values mean "not given")
    with the file *config_path* and the environment.

    :rtype: :class:`RunSettings`
    """
    values = {}
    if config_path:
        values.update(load_config(config_path))
    values.update({k: v for k, v in (flags or {}).items() if v is not None})
    settings = RunSettings(**values)
    logger.info("Using %r", settings)
    return settings
