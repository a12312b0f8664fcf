#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Reading tabular data and turning it into IV designs.

A :class:`ColumnSpec` names the outcome, the endogenous regressor(s),
the categorical and continuous controls, and the categorical
instruments of a specification, plus any (instrument, control) pairs
whose interactions should also instrument. :func:`build_design`
expands categoricals into dummies, dropping one reference level per
variable (the first in sorted order unless overridden), and
interactions into products of the retained dummies.

For example, with quarter of birth as the instrument and year of
birth as a control, four quarters and ten years give 3 main quarter
dummies and 3 x 9 interaction columns, 30 excluded instruments in all.

The wage outcome is expected already logged; no transformation is
applied to any column.
"""

__docformat__ = "restructuredtext en"

import json
import logging
import os

import numpy as np
import pandas as pd

from zope.interface import implementer

from nti.ivreg.dataset import build_dataset
from nti.ivreg.diagnostics import first_stage_f
from nti.ivreg.errors import EmptyAfterFiltering
from nti.ivreg.errors import InvalidConfiguration
from nti.ivreg.errors import IVError
from nti.ivreg.errors import ParseError
from nti.ivreg.errors import SchemaMismatch
from nti.ivreg.errors import SingleLevelCategorical
from nti.ivreg.estimators import get_estimator
from nti.ivreg.interfaces import IBuiltDesign
from nti.ivreg.interfaces import IColumnSpec
from nti.ivreg.interfaces import validate_schema
from nti.ivreg.rng import rng_for

logger = logging.getLogger(__name__)

#: Directory of the shipped column specs.
SCHEMA_DIR = os.path.join(os.path.dirname(__file__), 'schemas')

INTERCEPT = 'const'


@implementer(IColumnSpec)
class ColumnSpec(object):
    """
    The roles of the columns of a table.

    :raises InvalidConfiguration: if a field is malformed or an
        interaction names an undeclared variable.
    """

    def __init__(self, outcome, endogenous, instruments_categorical,
                 controls_categorical=(), controls_continuous=(),
                 interactions=(), reference_levels=None):
        self.outcome = outcome
        self.endogenous = _names(endogenous)
        self.instruments_categorical = _names(instruments_categorical)
        self.controls_categorical = _names(controls_categorical)
        self.controls_continuous = _names(controls_continuous)
        self.interactions = tuple(tuple(pair) for pair in interactions)
        self.reference_levels = {str(k): str(v) for k, v in (reference_levels or {}).items()}
        validate_schema(IColumnSpec, self)
        declared = self.columns
        if len(set(declared)) != len(declared):
            raise InvalidConfiguration("A column is declared in more than one role: %s"
                                       % (declared,))

    @property
    def categoricals(self):
        return self.controls_categorical + self.instruments_categorical

    @property
    def numeric(self):
        return (self.outcome,) + self.endogenous + self.controls_continuous

    @property
    def columns(self):
        "Every declared column, numeric ones first."
        return self.numeric + self.categoricals

    def replace(self, **kwargs):
        args = dict(outcome=self.outcome, endogenous=self.endogenous,
                    instruments_categorical=self.instruments_categorical,
                    controls_categorical=self.controls_categorical,
                    controls_continuous=self.controls_continuous,
                    interactions=self.interactions,
                    reference_levels=self.reference_levels)
        args.update(kwargs)
        return type(self)(**args)


def _names(value):
    if isinstance(value, str):
        return (value,)
    return tuple(value)


_SCHEMA_KEYS = ('outcome', 'endogenous', 'instruments_categorical', 'controls_categorical',
                'controls_continuous', 'interactions', 'reference_levels')


def load_schema(path):
    """
    Read a :class:`ColumnSpec` from the JSON object in *path*. Its keys
    are the argument names of :class:`ColumnSpec`.

    :raises SchemaMismatch: if the file is not such an object.
    """
    with open(path, encoding='utf-8') as f:
        try:
            data = json.load(f)
        except ValueError as ex:
            raise SchemaMismatch("%s is not valid JSON: %s" % (path, ex)) from ex
    if not isinstance(data, dict):
        raise SchemaMismatch("%s must contain a JSON object" % (path,))
    unknown = sorted(set(data) - set(_SCHEMA_KEYS))
    if unknown:
        raise SchemaMismatch("Unknown keys in %s: %s" % (path, ', '.join(unknown)))
    for key in ('outcome', 'endogenous', 'instruments_categorical'):
        if key not in data:
            raise SchemaMismatch("%s does not declare %r" % (path, key))
    try:
        return ColumnSpec(**data)
    except InvalidConfiguration as ex:
        raise SchemaMismatch("%s: %s" % (path, ex)) from ex


def _sorted_levels(values):
    levels = sorted(set(values))
    try:
        return sorted(levels, key=float)
    except ValueError:
        return levels


def read_csv(path, spec):
    """
    Read the declared columns of the CSV file *path* (UTF-8, comma
    separated, with a header row).

    Numeric columns are parsed as floats; categorical ones are kept as
    stripped strings.

    :raises FileNotFoundError: if *path* does not exist.
    :raises SchemaMismatch: if a declared column is missing.
    :raises ParseError: for the first unparseable or empty declared
        cell; rows are numbered from 1 after the header.
    :raises EmptyAfterFiltering: if the file has no data rows.
    """
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError as ex:
        raise SchemaMismatch("%s has no header row" % (path,)) from ex
    raw.columns = [c.strip() for c in raw.columns]
    missing = [c for c in spec.columns if c not in raw.columns]
    if missing:
        raise SchemaMismatch("%s lacks declared column(s) %s" % (path, ', '.join(missing)))
    if raw.empty:
        raise EmptyAfterFiltering("%s has no data rows" % (path,))
    table = pd.DataFrame(index=raw.index)
    for column in spec.numeric:
        text = raw[column].str.strip()
        parsed = pd.to_numeric(text, errors='coerce')
        bad = np.flatnonzero(~np.isfinite(parsed.to_numpy(dtype=float, na_value=np.nan)))
        if bad.size:
            raise ParseError(int(bad[0]) + 1, column, raw[column].iloc[bad[0]])
        table[column] = parsed.astype(float)
    for column in spec.categoricals:
        text = raw[column].str.strip()
        empty = np.flatnonzero((text == '').to_numpy())
        if empty.size:
            raise ParseError(int(empty[0]) + 1, column, raw[column].iloc[empty[0]])
        table[column] = text
    logger.info("Read %d rows of %d declared columns from %s",
                len(table), len(spec.columns), path)
    return table


@implementer(IBuiltDesign)
class BuiltDesign(object):
    """
    A dataset together with the meaning of its generated columns.

    ``labels`` maps each dummy column name to ``(variable, level)``
    and each interaction column to
    ``((variable_a, level_a), (variable_b, level_b))``.
    """

    def __init__(self, dataset, spec, labels, dropped_levels):
        self.dataset = dataset
        self.spec = spec
        self.labels = labels
        self.dropped_levels = dropped_levels

    @property
    def instrument_names(self):
        return self.dataset.z_names[self.dataset.m:]


def _numeric(table, column):
    values = pd.to_numeric(table[column], errors='coerce').to_numpy(dtype=float, na_value=np.nan)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise ParseError(int(bad[0]) + 1, column, table[column].iloc[bad[0]])
    return values


def build_design(table, spec):
    """
    Expand *table* per *spec* into a :class:`BuiltDesign`.

    ``X = [1, control dummies, continuous controls, endogenous]`` and
    ``Z = [1, control dummies, continuous controls, instrument dummies,
    interactions]``; the shared leading block is the included
    exogenous part.

    :raises EmptyAfterFiltering: if *table* has no rows.
    :raises SingleLevelCategorical: if a categorical has one level.
    :raises SchemaMismatch: if a reference level override names a
        level that does not occur.
    :raises RankDeficientInstruments: if the expanded instruments are
        collinear.
    """
    missing = [c for c in spec.columns if c not in table.columns]
    if missing:
        raise SchemaMismatch("Table lacks declared column(s) %s" % (', '.join(missing),))
    n = len(table)
    if n == 0:
        raise EmptyAfterFiltering("No rows to build a design from")

    labels = {}
    dropped = {}
    dummies = {}
    for var in spec.categoricals:
        column = table[var].astype(str).str.strip()
        levels = _sorted_levels(column)
        if len(levels) < 2:
            raise SingleLevelCategorical("%r has the single level %r" % (var, levels))
        reference = spec.reference_levels.get(var, levels[0])
        if reference not in levels:
            raise SchemaMismatch("Reference level %r of %r does not occur" % (reference, var))
        dropped[var] = reference
        retained = []
        for level in levels:
            if level == reference:
                continue
            name = '%s=%s' % (var, level)
            labels[name] = (var, level)
            retained.append((name, level, (column == level).to_numpy(dtype=float)))
        dummies[var] = retained

    exog_names = [INTERCEPT]
    exog = [np.ones(n)]
    for var in spec.controls_categorical:
        for name, _level, values in dummies[var]:
            exog_names.append(name)
            exog.append(values)
    for var in spec.controls_continuous:
        exog_names.append(var)
        exog.append(_numeric(table, var))

    inst_names, inst = [], []
    for var in spec.instruments_categorical:
        for name, _level, values in dummies[var]:
            inst_names.append(name)
            inst.append(values)
    for var_a, var_b in spec.interactions:
        for name_a, level_a, values_a in dummies[var_a]:
            for name_b, level_b, values_b in dummies[var_b]:
                name = '%s*%s' % (name_a, name_b)
                labels[name] = ((var_a, level_a), (var_b, level_b))
                inst_names.append(name)
                inst.append(values_a * values_b)

    endog = [_numeric(table, var) for var in spec.endogenous]
    y = _numeric(table, spec.outcome)
    x = np.column_stack(exog + endog)
    z = np.column_stack(exog + inst)
    dataset = build_dataset(y, x, z, n_exog=len(exog),
                            column_names=(tuple(exog_names) + spec.endogenous,
                                          tuple(exog_names + inst_names)))
    logger.info("Built design: N=%d, %d exogenous, %d excluded instruments",
                n, len(exog), len(inst))
    return BuiltDesign(dataset, spec, labels, dropped)


#: Columns of the :func:`run_specification` report.
REPORT_COLUMNS = ('estimator', 'regressor', 'coef', 'stderr', 'first_stage_f',
                  'r2_x100', 'adj_r2_x100', 'k_excluded', 'verdict', 'n')


def run_specification(design, estimators=('ols', '2sls', 'liml', 'jive')):
    """
    Fit each named estimator to *design* and report the coefficient
    of the (first) endogenous regressor with first-stage statistics.
    R^2 values are reported times 100. When no first-stage statistic
    exists for *design* (several endogenous regressors, say) its
    columns are null.

    :rtype: :class:`pandas.DataFrame` with :data:`REPORT_COLUMNS`.
    """
    d = design.dataset
    try:
        diag = first_stage_f(d)
    except IVError as ex:
        logger.warning("No first-stage diagnostics: %s", ex)
        diag = None
    index = d.m
    rows = []
    for name in estimators:
        try:
            result = get_estimator(name)(d)
        except IVError as ex:
            logger.error("Estimator %s failed: %s", name, ex)
            raise
        rows.append({
            'estimator': name,
            'regressor': d.x_names[index],
            'coef': result.coef(index),
            'stderr': result.stderr(index),
            'first_stage_f': diag.f_stat if diag else None,
            'r2_x100': diag.r2 * 100 if diag else None,
            'adj_r2_x100': diag.adj_r2 * 100 if diag else None,
            'k_excluded': d.k_excluded,
            'verdict': diag.verdict if diag else None,
            'n': d.n,
        })
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def group_means(table, by, value):
    """
    The mean and count of *value* within each cell of the categorical
    column(s) *by*, cells in sorted level order.
    """
    by = list(_names(by))
    frame = pd.DataFrame({var: table[var].astype(str).str.strip() for var in by})
    frame[value] = _numeric(table, value)
    ranks = [{level: i for i, level in enumerate(_sorted_levels(frame[var]))} for var in by]
    grouped = frame.groupby(by)[value].agg(['mean', 'count']).reset_index()
    cells = list(zip(*(grouped[var] for var in by)))
    order = sorted(range(len(cells)),
                   key=lambda i: tuple(rank[level] for rank, level in zip(ranks, cells[i])))
    return grouped.iloc[order].reset_index(drop=True)


def generate_mini_census(n=2000, seed=42, return_to_schooling=0.08, n_years=10, n_states=0):
    """
    A synthetic extract with the columns of the shipped census specs:
    ``LWKLYWGE`` (log weekly wage), ``EDUC``, ``QOB`` (1-4), ``YOB``
    (from 1930) and, if *n_states* is positive, ``POB``.

    Schooling rises by 0.8 years per quarter of birth, so quarter is a
    strong instrument. Unobserved ability raises both schooling and
    wages, so OLS is biased upwards while IV recovers
    *return_to_schooling*.
    """
    rng = rng_for(seed)
    qob = rng.integers(1, 5, size=n)
    yob = 1930 + rng.integers(0, n_years, size=n)
    ability = rng.standard_normal(n)
    educ = (12.0 + 0.8 * (qob - 1) + 0.1 * (yob - 1930)
            + ability + 2.0 * rng.standard_normal(n))
    wage = (5.0 + return_to_schooling * educ + 0.02 * (yob - 1930)
            + 0.3 * ability + 0.5 * rng.standard_normal(n))
    data = {'LWKLYWGE': wage, 'EDUC': educ, 'QOB': qob, 'YOB': yob}
    if n_states:
        data['POB'] = 1 + rng.integers(0, n_states, size=n)
    return pd.DataFrame(data)
