#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Rendering result tables as CSV or JSON.

Every float is written with 6 significant digits, and columns keep
the order the producing function declares, so output files are
stable across runs and platforms. Reading a CSV back reproduces the
rounded values exactly:

.. doctest::

   >>> import pandas as pd
   >>> from nti.ivreg.report import render
   >>> frame = pd.DataFrame({'estimator': ['ols'], 'median_bias': [0.58712345]})
   >>> print(render(frame, 'csv'), end='')
   estimator,median_bias
   ols,0.587123
   >>> print(render(frame, 'json', kind='summary'), end='')
   {
     "schema": "nti.ivreg.summary/1",
     "rows": [
       {
         "estimator": "ols",
         "median_bias": 0.587123
       }
     ]
   }

A JSON document is an object with a ``schema`` identifier
(``nti.ivreg.<kind>/<version>``) and a ``rows`` array of objects
keyed by column name; missing values are ``null``.
"""

__docformat__ = "restructuredtext en"

import io
import json
import logging
import math
import sys

import numpy as np

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'json')

#: Bumped whenever a column is renamed or removed.
SCHEMA_VERSION = 1

FLOAT_FORMAT = '%.6g'


def _plain(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(FLOAT_FORMAT % value)
    if value is None:
        return None
    try:
        if value != value: # NaN of some other type
            return None
    except (TypeError, ValueError): # pragma: no cover
        pass
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def to_csv(frame):
    out = io.StringIO()
    frame.to_csv(out, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return out.getvalue()


def to_json(frame, kind='summary'):
    rows = [{str(k): _plain(v) for k, v in row.items()}
            for row in frame.to_dict(orient='records')]
    document = {'schema': 'nti.ivreg.%s/%d' % (kind, SCHEMA_VERSION), 'rows': rows}
    return json.dumps(document, indent=2) + '\n'


def render(frame, fmt='csv', kind='summary'):
    """
    The text of *frame* in format *fmt* (``csv`` or ``json``).
    """
    if fmt == 'csv':
        return to_csv(frame)
    if fmt == 'json':
        return to_json(frame, kind)
    raise ValueError("Unknown format %r; choose from %s" % (fmt, FORMATS))


def write(frame, fmt='csv', output=None, kind='summary'):
    """
    Write *frame* to the file *output*, or to standard output when
    *output* is None or ``-``.
    """
    text = render(frame, fmt, kind)
    if output in (None, '-'):
        sys.stdout.write(text)
        return
    with open(output, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    logger.info("Wrote %d rows to %s", len(frame), output)
