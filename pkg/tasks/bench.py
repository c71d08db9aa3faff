"""
The experiments on the default benchmark: the method comparison, the
eviction-policy ablation, the hyperparameter sweeps and the gradient
fields of a diffusion-only and a full-method run. Each goes to its own
directory under bench/ and is run through the command line, so every
result directory carries its resolved.cfg and run.log.
"""

import os
import sys
import subprocess

from invoke import task

from ._config import BENCH_DIR, NAME

SWEEPS = [
    ('lambda_gen', '0.002,0.004,0.008,0.016'),
    ('lambda_real', '0.0005,0.001,0.002,0.004'),
    ('capacity', '16,32,64,128'),
]


def _run(verb, out, *args):
    cmd = [sys.executable, '-m', NAME, verb, '--out', os.path.join(BENCH_DIR, out),
           '--force'] + list(args)
    print(' '.join(cmd))
    subprocess.check_call(cmd)


def _show(out, name):
    with open(os.path.join(BENCH_DIR, out, name), 'rb') as f:
        print(f.read().decode())


@task(help=dict(jobs='number of worker processes',
                only='run one of: compare, ablate, sweep, field',
                ablation_ipcs='the IPC settings of the comparison and ablation'))
def bench(ctx, jobs=1, only='', ablation_ipcs='10,50'):
    """ run the experiments on the default benchmark (slow)
    """
    parts = ('compare', 'ablate', 'sweep', 'field')
    if only and only not in parts:
        sys.exit('bench --only must be one of %s' % ', '.join(parts))
    jobs = '--jobs=%i' % int(jobs)
    ipcs = 'ablation_ipcs=' + ablation_ipcs

    if only in ('', 'compare'):
        _run('compare', 'compare', jobs, ipcs)
        _show('compare', 'comparison_checks.csv')
    if only in ('', 'ablate'):
        _run('ablate', 'ablate', jobs, ipcs)
        _show('ablate', 'ablation_checks.csv')
    if only in ('', 'sweep'):
        for parameter, values in SWEEPS:
            _run('sweep', 'sweep_' + parameter, jobs, '--parameter', parameter,
                 '--values', values)
    if only in ('', 'field'):
        _run('pretrain', 'pretrained')
        params = os.path.join(BENCH_DIR, 'pretrained', 'params.bin')
        for name, overrides in [('diffusion_only', ['lambda_real=0', 'lambda_gen=0']),
                                ('full_method', [])]:
            _run('distill', name, '--params', params, *overrides)
            _run('plot-field', 'field_' + name, '--params',
                 os.path.join(BENCH_DIR, name, 'params.bin'))
    print('Results are in %s' % BENCH_DIR)
