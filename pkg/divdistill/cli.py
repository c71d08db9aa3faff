"""
The command line interface.

Usage::

    divdistill <command> [--config FILE] [--out DIR] [--force] [key=value ...]

Every command writes into its output directory only, starting with a
``resolved.cfg`` that reproduces the run, and a ``run.log``. On failure
a single line ``divdistill: error: <category>: <message>`` goes to stderr;
the exit code is 2 for usage and config errors and 1 otherwise.
"""

import os
import sys
import logging
import argparse

from . import logger, __version__
from .base import ArtifactError, ConfigError, DistillError
from .config import load_config, describe_keys
from .artifacts import (prepare_output_dir, write_resolved_config, write_params,
                        read_params, write_distilled, read_distilled, write_csv,
                        write_pretrain_log, save_run, PARAMS_FILE, DISTILLED_FILE,
                        PRETRAIN_LOG_FILE)
from .pipeline import (pretrain, distill, generate_distilled, build_schedule,
                       run_distillation)
from .synthbench import (default_benchmark, evaluate, run_ablation, run_sweep,
                         run_comparison, comparison_checks, ablation_checks,
                         SWEEP_PARAMETERS)
from .field import emit_gradient_field

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class UsageError(ConfigError):
    category = 'usage'


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='a flat key = value config file')
    common.add_argument('--out', default='.', help='the output directory')
    common.add_argument('--force', action='store_true',
                        help='overwrite an existing run in the output directory')
    common.add_argument('--verbose', action='store_true', help='log debug messages')
    common.add_argument('--quiet', action='store_true', help='log warnings only')
    common.add_argument('overrides', nargs='*', metavar='key=value',
                        help='config overrides, applied after the config file')

    epilog = 'config keys (with defaults):\n' + '\n'.join(describe_keys())
    parser = _ArgumentParser(
        prog='divdistill', epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description='Diversity-driven generative dataset distillation on '
                    'synthetic latents.')
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command', metavar='command')

    def add(name, help):
        return sub.add_parser(name, parents=[common], help=help, epilog=epilog,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    add('pretrain', 'pretrain the diffusion model on the benchmark')
    p = add('distill', 'fine-tune with the memory losses and generate the set')
    p.add_argument('--params', help='pretrained parameters (default: pretrain)')
    p = add('generate', 'generate a distilled set from trained parameters')
    p.add_argument('--params', required=True, help='the parameter file')
    p = add('eval', 'evaluate a distilled set on the benchmark')
    p.add_argument('--distilled', required=True, help='the distilled-set CSV')
    for name in ('ablate', 'compare'):
        p = add(name, 'run the eviction-policy ablation' if name == 'ablate'
                else 'compare against the selection baselines')
        p.add_argument('--jobs', type=int, default=1, help='worker processes')
    p = add('sweep', 'sweep one hyperparameter')
    p.add_argument('--parameter', required=True, choices=SWEEP_PARAMETERS)
    p.add_argument('--values', required=True, help='comma separated values')
    p.add_argument('--jobs', type=int, default=1, help='worker processes')
    p = add('plot-field', 'write the denoising direction field (CSV and SVG)')
    p.add_argument('--params', required=True, help='the parameter file')
    p.add_argument('--t', type=int, default=10, help='the timestep')
    p.add_argument('--class', dest='label', type=int, default=None,
                   help='the class (default: every class)')
    p.add_argument('--bounds', default='-0.9,0.9,-0.9,0.9',
                   help='xmin,xmax,ymin,ymax')
    p.add_argument('--resolution', type=int, default=25,
                   help='grid points per axis')
    return parser


def setup_logging(out_dir, verbose=False, quiet=False):
    """ Attach a stderr handler and a run.log file handler to the
    package logger. Returns the handlers, to detach them afterwards.
    """
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    formatter = logging.Formatter(LOG_FORMAT)
    stream = logging.StreamHandler(sys.stderr)
    stream.setLevel(level)
    stream.setFormatter(formatter)
    logfile = logging.FileHandler(os.path.join(out_dir, 'run.log'), mode='w')
    logfile.setLevel(logging.DEBUG if verbose else logging.INFO)
    logfile.setFormatter(formatter)
    handlers = [stream, logfile]
    for h in handlers:
        logger.addHandler(h)
    logger.setLevel(logging.DEBUG)
    return handlers


## Commands

def cmd_pretrain(args, config, out):
    train, test, _ = default_benchmark(config)
    history = []
    params = pretrain(config, train, history)
    write_params(os.path.join(out, PARAMS_FILE), params)
    write_pretrain_log(os.path.join(out, PRETRAIN_LOG_FILE), history)
    write_distilled(os.path.join(out, 'train.csv'), train)
    write_distilled(os.path.join(out, 'test.csv'), test)


def cmd_distill(args, config, out):
    train, _, _ = default_benchmark(config)
    if args.params:
        artifacts = distill(read_params(args.params), config, train)
    else:
        artifacts = run_distillation(config, train)
    save_run(out, config, artifacts)


def cmd_generate(args, config, out):
    params = read_params(args.params)
    distilled = generate_distilled(params, config)
    write_distilled(os.path.join(out, DISTILLED_FILE), distilled)


def cmd_eval(args, config, out):
    _, test, spec = default_benchmark(config)
    distilled = read_distilled(args.distilled)
    report = evaluate(distilled, test, spec, config, range(config.eval_seeds))
    write_csv(os.path.join(out, 'eval.csv'),
              ['top1_accuracy', 'mode_coverage', 'mean_nn_distance'],
              [report.as_row()])
    write_csv(os.path.join(out, 'eval_seeds.csv'), ['seed', 'top1_accuracy'],
              report.per_seed)
    logger.info('top-1 accuracy %.4f, mode coverage %.4f, mean NN distance %.4f',
                report.top1_accuracy, report.mode_coverage, report.mean_nn_distance)


def _write_table(out, name, table, group_by):
    table.write(os.path.join(out, name + '.csv'))
    summary = table.summarize(group_by)
    summary.write(os.path.join(out, name + '_summary.csv'))
    n_err = sum(summary.column('n_error'))
    if n_err:
        logger.warning('%i run(s) failed, see the error rows of %s.csv', n_err, name)


def _write_checks(out, name, checks):
    checks.write(os.path.join(out, name + '.csv'))
    for check, ipc, value, reference, passed in checks.rows:
        log = logger.info if passed else logger.warning
        log('%s %s (ipc %s): %s vs %s', check, 'holds' if passed else 'FAILS',
            ipc or 'all', value, reference)


def cmd_ablate(args, config, out):
    table = run_ablation(config, jobs=args.jobs)
    _write_table(out, 'ablation', table, ['policy_real', 'policy_gen', 'ipc'])
    _write_checks(out, 'ablation_checks', ablation_checks(table))


def cmd_compare(args, config, out):
    table = run_comparison(config, jobs=args.jobs)
    _write_table(out, 'comparison', table, ['method', 'ipc'])
    _write_checks(out, 'comparison_checks', comparison_checks(table))


def cmd_sweep(args, config, out):
    try:
        values = [float(v) for v in args.values.split(',') if v.strip()]
    except ValueError:
        raise UsageError('--values must be comma separated numbers')
    table = run_sweep(args.parameter, values, config, jobs=args.jobs)
    _write_table(out, 'sweep', table, ['parameter', 'value', 'ipc'])


def cmd_plot_field(args, config, out):
    try:
        bounds = [float(v) for v in args.bounds.split(',')]
    except ValueError:
        bounds = []
    if len(bounds) != 4:
        raise UsageError('--bounds must be xmin,xmax,ymin,ymax')
    params = read_params(args.params)
    sched = build_schedule(config)
    labels = range(config.n_classes) if args.label is None else [args.label]
    for label in labels:
        base = os.path.join(out, 'field_class_%i' % label)
        emit_gradient_field(params, bounds, args.resolution, args.t, label, sched,
                            base + '.csv', base + '.svg')


DISPATCH = {
    'pretrain': cmd_pretrain,
    'distill': cmd_distill,
    'generate': cmd_generate,
    'eval': cmd_eval,
    'ablate': cmd_ablate,
    'sweep': cmd_sweep,
    'compare': cmd_compare,
    'plot-field': cmd_plot_field,
}


def _report_error(err):
    msg = str(err).splitlines()[0] if str(err) else err.__class__.__name__
    sys.stderr.write('divdistill: error: %s: %s\n' % (err.category, msg))


def parse_and_dispatch(argv=None):
    """ Run a command line and return the exit status.
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:  # --help and --version
        return err.code or 0
    except UsageError as err:
        _report_error(err)
        return 2
    if not args.command:
        parser.print_help()
        return 2

    try:
        config = load_config(args.config, args.overrides)
        inputs = [args.config, getattr(args, 'params', None),
                  getattr(args, 'distilled', None)]
        out = prepare_output_dir(args.out, args.force, inputs)
    except ConfigError as err:
        _report_error(err)
        return 2
    except ArtifactError as err:
        _report_error(err)
        return 1

    handlers = setup_logging(out, args.verbose, args.quiet)
    try:
        write_resolved_config(out, config)
        logger.info('divdistill %s: %s into %s', __version__, args.command, out)
        DISPATCH[args.command](args, config, out)
        return 0
    except UsageError as err:
        _report_error(err)
        return 2
    except DistillError as err:
        logger.debug('failure', exc_info=True)
        _report_error(err)
        return 1
    finally:
        for h in handlers:
            logger.removeHandler(h)
            h.close()


def main():
    sys.exit(parse_and_dispatch())
