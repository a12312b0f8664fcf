# -*- coding: utf-8 -*-
"""
Settings read once from the environment.

A :class:`Tunable` is a class-level descriptor whose value comes from
an environment variable the first time it is read, converted by a
named getter, and falls back to its default (with a logged error) when
the variable is malformed.

.. doctest::

   >>> import os
   >>> from nti.ivreg.tunables import Tunable
   >>> os.environ['NTI_IVREG_TEST'] = '7'
   >>> class Settings:
   ...     WORKERS = Tunable(1, 'NTI_IVREG_TEST')
   >>> Settings().WORKERS
   7
   >>> os.environ['NTI_IVREG_TEST'] = '8'
   >>> Settings().WORKERS
   7
   >>> Settings.WORKERS.reset()
   >>> Settings().WORKERS
   8
   >>> del os.environ['NTI_IVREG_TEST']

Without an explicit name the variable is derived from the module,
class and attribute:

.. doctest::

   >>> __name__ = 'nti.ivreg.config'
   >>> class RunSettings:
   ...     REPS = Tunable(5000)
   >>> RunSettings.REPS.env_name
   'NTI_IVREG_CONFIG_RUNSETTINGS_REPS'

Getters are :class:`IEnvironGetter` utilities looked up by name, with
:data:`ENVIRON_GETTERS` as the fallback when none is registered. The
conversions are range-checked :mod:`ZConfig.datatypes`.

.. testcleanup::

    from zope.testing import cleanup
    cleanup.cleanUp()
"""
import os
import logging

from zope import component
from zope.component import named
from zope.interface import Interface
from zope.interface import provider

from ZConfig.datatypes import integer
from ZConfig.datatypes import RangeCheckedConversion

_logger = logging.getLogger(__name__)

positive_integer = RangeCheckedConversion(integer, min=1)
non_negative_float = RangeCheckedConversion(float, min=0)
seed_integer = RangeCheckedConversion(integer, min=0, max=2 ** 64 - 1)

#: Output formats accepted by ``get_format_from_environ``.
OUTPUT_FORMATS = ('csv', 'json')


def _setting_from_environ(converter, environ_name, default, logger, target):
    logger = logger or _logger
    result = default
    env_val = os.environ.get(environ_name, default) if environ_name else default
    if env_val is not default:
        try:
            result = converter(env_val)
        except (ValueError, TypeError):
            logger.exception("Failed to parse environment value %r for key %r",
                             env_val, environ_name)
            result = default

    logger.debug(
        'Using value %s from environ %r; $%s=%r; default=%r; target=%s',
        result, environ_name, environ_name, env_val, default, target)
    return result


class IEnvironGetter(Interface): # pylint:disable=inherit-non-class
    """
    A getter function for use with :class:`Tunable`.
    """
    # pylint:disable=no-self-argument
    def __call__(environ_name, default, logger=None, target=None):
        """
        Read and convert the environment variable *environ_name*,
        returning *default* when it is missing or malformed.

        *target* names the setting, for logging only.
        """


class _EnvironGetterRegistry(dict):
    def __init__(self):
        self.__orig = {}
        self.__closed = False

    def __setitem__(self, name, value):
        if not self.__closed:
            self.__orig[name] = value
        super().__setitem__(name, value)

    def close(self):
        self.__closed = True

    def reset(self): # pragma: no cover
        self.clear()
        self.update(self.__orig)

    def __repr__(self):
        return "<EnvironGetters %s>" % (list(self),)

    __str__ = __repr__

#: The mapping from string names to getter functions used
#: when there are no components registered.
ENVIRON_GETTERS = _EnvironGetterRegistry()


def _getter(name):
    def wrap(func):
        func = named(name)(func)
        func = provider(IEnvironGetter)(func)
        assert name not in ENVIRON_GETTERS
        ENVIRON_GETTERS[name] = func
        return func
    return wrap

try:
    from zope.testing import cleanup
except ImportError: # pragma: no cover
    pass
else:
    cleanup.addCleanUp(ENVIRON_GETTERS.reset)


@_getter('integer+')
def get_positive_integer_from_environ(environ_name, default, logger=None, target=None):
    """
    An integer of at least 1; anything else gives the default.

    >>> import os
    >>> from nti.ivreg.tunables import get_positive_integer_from_environ as fut
    >>> os.environ['RS_TEST_VAL'] = '8'
    >>> fut('RS_TEST_VAL', 1)
    8
    >>> os.environ['RS_TEST_VAL'] = '0'
    >>> fut('RS_TEST_VAL', 1)
    1
    >>> os.environ['RS_TEST_VAL'] = 'many'
    >>> fut('RS_TEST_VAL', 1)
    1
    """
    return _setting_from_environ(positive_integer, environ_name, default, logger, target)


@_getter('float0')
def get_non_negative_float_from_environ(environ_name, default, logger=None, target=None):
    """
    >>> import os
    >>> from nti.ivreg.tunables import get_non_negative_float_from_environ
    >>> os.environ['RS_TEST_VAL'] = '2.5'
    >>> get_non_negative_float_from_environ('RS_TEST_VAL', None)
    2.5
    >>> os.environ['RS_TEST_VAL'] = '-2.5'
    >>> get_non_negative_float_from_environ('RS_TEST_VAL', 50.0)
    50.0
    """
    return _setting_from_environ(non_negative_float, environ_name, default, logger, target)


@_getter('seed')
def get_seed_from_environ(environ_name, default, logger=None, target=None):
    """
    An unsigned 64-bit integer.

    >>> import os
    >>> from nti.ivreg.tunables import get_seed_from_environ
    >>> os.environ['RS_TEST_VAL'] = '18446744073709551615'
    >>> get_seed_from_environ('RS_TEST_VAL', 42)
    18446744073709551615
    >>> os.environ['RS_TEST_VAL'] = '18446744073709551616'
    >>> get_seed_from_environ('RS_TEST_VAL', 42)
    42
    """
    return _setting_from_environ(seed_integer, environ_name, default, logger, target)


def parse_format(val):
    """
    >>> from nti.ivreg.tunables import parse_format
    >>> parse_format(' JSON ')
    'json'
    """
    val = val.strip().lower()
    if val not in OUTPUT_FORMATS:
        raise ValueError("Unknown output format %r" % (val,))
    return val


@_getter('output-format')
def get_format_from_environ(environ_name, default, logger=None, target=None):
    """
    One of :data:`OUTPUT_FORMATS`.

    .. seealso:: `parse_format`
    """
    return _setting_from_environ(parse_format, environ_name, default, logger, target)


class Tunable:
    """
    A non-data descriptor that returns the *default*, or a value
    from the environment read the first time it is accessed.

    >>> from nti.ivreg.tunables import Tunable
    >>> import os
    >>> os.environ['RS_TEST_VAL'] = 'json'
    >>> tunable = Tunable('csv', 'RS_TEST_VAL', 'output-format')
    >>> tunable
    <Default: 'csv' Environment Variable: 'RS_TEST_VAL'>
    >>> tunable.value
    'json'
    >>> os.environ['RS_TEST_VAL'] = 'xml'
    >>> tunable.reset()
    >>> tunable.value
    'csv'
    """

    _NOT_SET = object()
    _target_name = ''

    def __init__(self, default, env_name=None,
                 getter=get_positive_integer_from_environ,
                 logger=None):
        """
        :param str env_name: The environment variable. When the
           tunable is a class variable this defaults to
           ``MODULE_CLASS_ATTR``, upper-cased with dots replaced.
        :param getter: An :class:`IEnvironGetter`, or the name of one.
           Names are looked up as utilities first, then in
           :data:`ENVIRON_GETTERS`. The default reads a positive integer.
        :param logger: Where to log the value used; defaults to the
           logger of the module owning the class, or this module.
        """
        self.default = default
        self.env_name = env_name
        if not callable(getter):
            name = getter
            getter = component.queryUtility(IEnvironGetter, name=name,
                                            default=ENVIRON_GETTERS.get(name))
            if getter is None:
                raise KeyError("No environment getter named %r" % (name,))
        self.getter = getter
        self.logger = logger
        self._value = self._NOT_SET

    def __set_name__(self, cls, name):
        self._target_name = cls.__name__ + '.' + name
        if self.logger is None:
            self.logger = logging.getLogger(cls.__module__)
        if self.env_name is not None:
            return
        self.env_name = ('%s_%s_%s' % (
            cls.__module__,
            cls.__name__,
            name
        )).upper().replace('.', '_')

    def __str__(self):
        return "<Default: %r Environment Variable: %r>" % (
            self.default,
            self.env_name,
        )

    __repr__ = __str__

    def __get__(self, instance, cls=None):
        if instance is None:
            return self
        return self.value

    @property
    def value(self):
        """
        The setting, read from the environment on first use.
        """
        if self._value is self._NOT_SET:
            self._value = self.getter(self.env_name, self.default,
                                      self.logger, self._target_name)
        return self._value

    def reset(self):
        "Forget the cached value; the environment is read again on next use."
        self._value = self._NOT_SET


ENVIRON_GETTERS.close()


def register_getters(registry=None):
    """
    Register every getter in :data:`ENVIRON_GETTERS` as a named
    :class:`IEnvironGetter` utility.
    """
    registry = registry if registry is not None else component.getGlobalSiteManager()
    for name, getter in ENVIRON_GETTERS.items():
        registry.registerUtility(getter, IEnvironGetter, name=name)
