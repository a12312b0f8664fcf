#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
The ``nti-ivreg`` command.

Verbs:

``estimate``
    Fit estimators to a CSV file described by a JSON column spec.
``diagnose``
    First-stage F, partial R^2, ``mu^2/K`` estimate and verdict, with
    the critical value table row when there is one.
``ar-ci``
    The Anderson-Rubin confidence set, as a list of intervals.
``simulate``
    Monte-Carlo summary of one preset model.
``sweep``
    Median biases over a grid of designs and sample sizes.
``replicate``
    All four presets beside their reference median biases and
    coverages.

Results go to standard output (or ``--output``) as CSV or JSON; logs
go to standard error. The exit status is 0 on success, 1 for a usage
error and 2 for a data or numeric error.
"""

__docformat__ = "restructuredtext en"

import argparse
import logging
import sys

import pandas as pd

from nti.ivreg import report
from nti.ivreg.config import resolve_settings
from nti.ivreg.diagnostics import Grid
from nti.ivreg.diagnostics import ar_confidence_set
from nti.ivreg.diagnostics import default_grid
from nti.ivreg.diagnostics import first_stage_coefficients
from nti.ivreg.diagnostics import first_stage_f
from nti.ivreg.errors import IVError
from nti.ivreg.ingestion import build_design
from nti.ivreg.ingestion import load_schema
from nti.ivreg.ingestion import read_csv
from nti.ivreg.ingestion import run_specification
from nti.ivreg.rng import MAX_SEED
from nti.ivreg.simulation import DEFAULT_ESTIMATORS
from nti.ivreg.simulation import SWEEP_AXES
from nti.ivreg.simulation import SWEEP_SIZES
from nti.ivreg.simulation import histogram
from nti.ivreg.simulation import model_preset
from nti.ivreg.simulation import replicate_presets
from nti.ivreg.simulation import run_mc
from nti.ivreg.simulation import run_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

#: Sweep values used when ``--values`` is not given.
DEFAULT_SWEEP_VALUES = {
    'rho': tuple(round(0.01 * i, 2) for i in range(100)),
    'r2_limit': tuple(round(0.01 * i, 2) for i in range(1, 100)),
    'k': tuple(range(2, 21)),
}


class UsageError(Exception):
    """A malformed command line."""


class _ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        raise UsageError('%s: %s' % (self.prog, message))


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("invalid seed %r" % (text,)) from None
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed %r is not an unsigned 64-bit integer" % (text,))
    return value


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("invalid count %r" % (text,)) from None
    if value < 1:
        raise argparse.ArgumentTypeError("%r must be at least 1" % (text,))
    return value


def _names(text):
    names = tuple(n.strip() for n in text.split(',') if n.strip())
    if not names:
        raise argparse.ArgumentTypeError("empty list")
    return names


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError("invalid number list %r" % (text,)) from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError("invalid integer list %r" % (text,)) from None


def _grid(text):
    values = _floats(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError("grid must be LO,HI,STEP")
    return values


def _common_options():
    common = _ArgumentParser(add_help=False)
    common.add_argument('--workers', type=_positive, help="Worker processes")
    common.add_argument('--format', choices=report.FORMATS, help="Output format")
    common.add_argument('--output', '-o', help="Output file; standard output by default")
    common.add_argument('--seed', type=_seed, help="Master seed (unsigned 64-bit)")
    common.add_argument('--config', help="ZConfig settings file")
    common.add_argument('--verbose', '-v', action='count', default=0,
                        help="More logging; repeat for debug output")
    return common


def _data_options(parser):
    parser.add_argument('--input', '-i', required=True, help="CSV file")
    parser.add_argument('--schema', '-s', required=True, help="JSON column spec")


def make_parser():
    common = _common_options()
    parser = _ArgumentParser(prog='nti-ivreg',
                             description="Instrumental variables estimation and simulation.")
    verbs = parser.add_subparsers(dest='verb', metavar='VERB')
    verbs.required = True

    estimate = verbs.add_parser('estimate', parents=[common],
                                help="Fit estimators to a CSV file")
    _data_options(estimate)
    estimate.add_argument('--estimators', type=_names, default=DEFAULT_ESTIMATORS)

    diagnose = verbs.add_parser('diagnose', parents=[common],
                                help="First-stage strength diagnostics")
    _data_options(diagnose)
    diagnose.add_argument('--no-rule-of-thumb', dest='rule_of_thumb', action='store_false',
                          help="Report an indeterminate verdict when K has no table row")
    diagnose.add_argument('--coefficients', action='store_true',
                          help="Emit the first-stage coefficients instead")

    ar_ci = verbs.add_parser('ar-ci', parents=[common],
                             help="Anderson-Rubin confidence set")
    _data_options(ar_ci)
    ar_ci.add_argument('--level', type=float, default=0.05,
                       help="Test size; the set has coverage 1 - LEVEL")
    ar_ci.add_argument('--grid', type=_grid, help="LO,HI,STEP")

    simulate = verbs.add_parser('simulate', parents=[common],
                                help="Monte-Carlo summary of a preset model")
    simulate.add_argument('--model', type=int, required=True, choices=(1, 2, 3, 4))
    simulate.add_argument('--reps', type=_positive)
    simulate.add_argument('--n', type=_positive, default=200, help="Sample size")
    simulate.add_argument('--estimators', type=_names, default=DEFAULT_ESTIMATORS)
    simulate.add_argument('--instrument-dist', choices=('normal', 'uniform'), default='normal')
    simulate.add_argument('--histogram', metavar='ESTIMATOR',
                          help="Emit the binned distribution of one estimator")
    simulate.add_argument('--bins', type=_positive, default=80)
    simulate.add_argument('--lo', type=float, default=-3.0)
    simulate.add_argument('--hi', type=float, default=5.0)

    sweep = verbs.add_parser('sweep', parents=[common],
                             help="Median biases over a grid of designs")
    sweep.add_argument('--axis', required=True, choices=SWEEP_AXES)
    sweep.add_argument('--values', help="Comma separated axis values")
    sweep.add_argument('--sizes', type=_ints, default=SWEEP_SIZES)
    sweep.add_argument('--reps', type=_positive)
    sweep.add_argument('--estimators', type=_names, default=DEFAULT_ESTIMATORS)

    replicate = verbs.add_parser('replicate', parents=[common],
                                 help="All presets beside the reference results")
    replicate.add_argument('--reps', type=_positive)
    replicate.add_argument('--estimators', type=_names, default=DEFAULT_ESTIMATORS)
    return parser


def _load_design(args):
    spec = load_schema(args.schema)
    return build_design(read_csv(args.input, spec), spec)


def _estimate(args, settings):
    design = _load_design(args)
    return run_specification(design, args.estimators), 'estimates'


def _diagnose(args, settings):
    d = _load_design(args).dataset
    if args.coefficients:
        return first_stage_coefficients(d), 'first-stage'
    diag = first_stage_f(d, rule_of_thumb=args.rule_of_thumb)
    row = diag.table_row
    frame = pd.DataFrame([{
        'f_stat': diag.f_stat,
        'p_value': diag.p_value,
        'r2': diag.r2,
        'adj_r2': diag.adj_r2,
        'mu2_over_k_hat': diag.mu2_over_k_hat,
        'k_excluded': diag.k_excluded,
        'verdict': diag.verdict,
        'threshold_used': diag.threshold_used,
        'table_mu2_over_k': row.threshold if row else None,
        'table_f_critical': row.f_critical if row else None,
    }])
    return frame, 'diagnostics'


def _ar_ci(args, settings):
    d = _load_design(args).dataset
    if args.grid is not None:
        grid = Grid(*args.grid)
    else:
        grid = default_grid(d, settings.ar_grid_nodes, settings.ar_grid_width)
    result = ar_confidence_set(d, args.level, grid)
    if result.empty:
        logger.warning("The Anderson-Rubin set is empty on %r", grid)
    frame = pd.DataFrame([{'lo': lo, 'hi': hi, 'level': args.level,
                           'unbounded': result.unbounded,
                           'critical_value': result.critical_value,
                           'grid_lo': grid.lo, 'grid_hi': grid.hi, 'grid_step': grid.step}
                          for lo, hi in result.intervals],
                         columns=('lo', 'hi', 'level', 'unbounded', 'critical_value',
                                  'grid_lo', 'grid_hi', 'grid_step'))
    return frame, 'ar-set'


def _simulate(args, settings):
    cfg = model_preset(args.model, args.n).replace(instrument_dist=args.instrument_dist)
    estimators = args.estimators
    if args.histogram and args.histogram not in estimators:
        estimators = estimators + (args.histogram,)
    summary = run_mc(cfg, settings.reps, estimators, settings.seed, settings.workers)
    if args.histogram:
        return histogram(summary, args.histogram, args.lo, args.hi, args.bins), 'histogram'
    frame = summary.to_frame()
    frame.insert(0, 'model', args.model)
    frame['mean_f'] = summary.mean_f
    frame['ar_rejection_rate'] = summary.ar_rejection_rate
    frame['reps'] = summary.reps
    frame['seed'] = str(summary.seed)
    return frame, 'summary'


def _sweep(args, settings):
    if args.values is None:
        values = DEFAULT_SWEEP_VALUES[args.axis]
    else:
        parse = _ints if args.axis == 'k' else _floats
        try:
            values = parse(args.values)
        except argparse.ArgumentTypeError as ex:
            raise UsageError('--values: %s' % (ex,)) from None
    frame = run_sweep(args.axis, values, args.sizes, settings.sweep_reps,
                      args.estimators, settings.seed, settings.workers)
    return frame, 'sweep'


def _replicate(args, settings):
    return replicate_presets(settings.reps, args.estimators, settings.seed,
                             settings.workers), 'replicate'


_VERBS = {
    'estimate': _estimate,
    'diagnose': _diagnose,
    'ar-ci': _ar_ci,
    'simulate': _simulate,
    'sweep': _sweep,
    'replicate': _replicate,
}


def _configure_logging(verbosity):
    level = max(logging.DEBUG, logging.WARNING - 10 * verbosity)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger('nti.ivreg').setLevel(level)


def main(argv=None):
    """
    Run the command line *argv* (``sys.argv[1:]`` by default) and
    return the exit status.
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = make_parser().parse_args(argv)
    except UsageError as ex:
        sys.stderr.write('%s\n' % (ex,))
        return EXIT_USAGE
    except SystemExit as ex: # --help
        return ex.code or EXIT_OK
    _configure_logging(args.verbose)
    reps = getattr(args, 'reps', None)
    sweeping = args.verb == 'sweep'

    try:
        settings = resolve_settings({'workers': args.workers, 'seed': args.seed,
                                     'format': args.format,
                                     'reps': None if sweeping else reps,
                                     'sweep_reps': reps if sweeping else None},
                                    args.config)
        frame, kind = _VERBS[args.verb](args, settings)
        report.write(frame, settings.format, args.output, kind)
    except UsageError as ex:
        sys.stderr.write('nti-ivreg %s: %s\n' % (args.verb, ex))
        return EXIT_USAGE
    except KeyError as ex:
        sys.stderr.write('nti-ivreg %s: unknown name %s\n' % (args.verb, ex))
        return EXIT_USAGE
    except (IVError, FileNotFoundError) as ex:
        sys.stderr.write('nti-ivreg %s: %s: %s\n' % (args.verb, type(ex).__name__, ex))
        return EXIT_DATA
    return EXIT_OK


if __name__ == '__main__': # pragma: no cover
    sys.exit(main())
