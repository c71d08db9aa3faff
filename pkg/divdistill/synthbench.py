"""
Synthetic benchmark and evaluation.

The benchmark is an imbalanced Gaussian mixture per class: every class
has a few components arranged around a circle, one of them rare. A
distilled set is judged by

* ``top1_accuracy``: accuracy on the real test set of a small softmax
  classifier trained on the distilled set only,
* ``mode_coverage``: the fraction of mixture components that have at
  least one distilled sample of their class within two standard
  deviations of their mean,
* ``mean_nn_distance``: the mean distance from each real test point to
  the nearest distilled sample of its class.

The experiment runners (ablation, sweep, comparison) produce one row per
(cell, ipc, seed). Failed runs appear as rows with status ``error``.
"""

import math
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import logger
from .base import (ConfigError, DistillError, DomainError, TrainingError,
                   LabeledLatents)
from .config import DistillConfig
from .numerics import (RngStream, STREAM_DATA, STREAM_EVAL, init_optimizer,
                       optimizer_step)
from .pipeline import pretrain, fine_tune, generate_distilled
from .baselines import select
from .artifacts import write_csv

COVERAGE_RADIUS = 2.0  # in standard deviations


## The benchmark

class GmmSpec:
    """ A class-conditional Gaussian mixture.

    Parameters:
        means (array): shape (n_classes, n_components, d).
        std (float): the shared isotropic standard deviation (>= 0).
        weights (array): shape (n_components, ) shared by all classes, or
            (n_classes, n_components); positive, each row sums to 1.
        samples_per_class (int): the number of samples N drawn per class.
    """

    __slots__ = ['means', 'std', 'weights', 'samples_per_class']

    def __init__(self, means, std, weights, samples_per_class):
        means = np.asarray(means, dtype=np.float64)
        if means.ndim != 3 or 0 in means.shape:
            raise ConfigError('GmmSpec means must have shape (classes, components, d)')
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim == 1:
            weights = np.tile(weights, (means.shape[0], 1))
        if weights.shape != means.shape[:2]:
            raise ConfigError('GmmSpec weights have shape %r, expected %r' %
                              (weights.shape, means.shape[:2]))
        if np.any(~(weights > 0)) or np.any(np.abs(weights.sum(axis=1) - 1) > 1e-9):
            raise ConfigError('GmmSpec weights must be positive and sum to 1 per class')
        if not (np.isfinite(std) and std >= 0):
            raise ConfigError('GmmSpec std must be >= 0, got %r' % std)
        if int(samples_per_class) != samples_per_class or samples_per_class < 1:
            raise ConfigError('GmmSpec samples_per_class must be >= 1')
        self.means = means
        self.std = float(std)
        self.weights = weights
        self.samples_per_class = int(samples_per_class)

    def __repr__(self):
        return '<GmmSpec %i classes x %i components, d=%i>' % self.means.shape

    @property
    def n_classes(self):
        return self.means.shape[0]

    @property
    def n_components(self):
        return self.means.shape[1]

    @property
    def dim(self):
        return self.means.shape[2]

    def has_rare_mode(self, threshold=0.05):
        return bool(np.any(self.weights <= threshold))


def default_gmm_spec(config=None):
    """ The default benchmark: per class, components on a circle of
    radius gmm_radius in the first two latent coordinates. The leading
    components sit at offsets 0, +1, -1, +2, ... times gmm_spread around
    the class direction; the last (rare) one sits gmm_rare_offset spreads
    below it, next to the neighbouring class.
    """
    config = config or DistillConfig()
    k = len(config.gmm_weights)
    offsets = [(j + 1) // 2 * (1 if j % 2 else -1) for j in range(k - 1)]
    offsets.append(-config.gmm_rare_offset if k > 1 else 0)
    means = np.zeros((config.n_classes, k, config.latent_dim))
    for c in range(config.n_classes):
        base = 2.0 * math.pi * c / config.n_classes
        for j, offset in enumerate(offsets):
            angle = base + offset * config.gmm_spread
            means[c, j, 0] = config.gmm_radius * math.cos(angle)
            if config.latent_dim > 1:
                means[c, j, 1] = config.gmm_radius * math.sin(angle)
    return GmmSpec(means, config.gmm_std, config.gmm_weights,
                   config.samples_per_class)


def make_benchmark(spec, rng, train_fraction=0.8):
    """ Draw a labeled dataset from the mixture and split it per class.

    Returns:
        tuple: (train, test) LabeledLatents, with the drawn component of
        every sample in ``components``.
    """
    if not 0 < train_fraction <= 1:
        raise ConfigError('train_fraction must lie in (0, 1]')
    parts = {'train': ([], [], []), 'test': ([], [], [])}
    n = spec.samples_per_class
    n_train = min(n, max(1, int(round(n * train_fraction))))
    for c in range(spec.n_classes):
        comps = rng.choice(spec.n_components, n, p=spec.weights[c])
        points = spec.means[c][comps] + spec.std * rng.normal((n, spec.dim))
        order = rng.permutation(n)
        for name, idx in [('train', order[:n_train]), ('test', order[n_train:])]:
            parts[name][0].append(points[idx])
            parts[name][1].append(np.full(idx.shape, c))
            parts[name][2].append(comps[idx])
    out = []
    for name in ('train', 'test'):
        latents, labels, comps = (np.concatenate(p) for p in parts[name])
        out.append(LabeledLatents(latents.reshape(-1, spec.dim), labels, comps))
    return tuple(out)


def default_benchmark(config):
    """ Get (train, test, spec) of the benchmark described by a config.
    """
    spec = default_gmm_spec(config)
    rng = RngStream(config.seed_benchmark, STREAM_DATA)
    train, test = make_benchmark(spec, rng, config.train_fraction)
    return train, test, spec


## The downstream classifier

class Classifier:
    """ A small softmax classifier: one tanh hidden layer, or a linear
    model when hidden is 0. Inputs are standardized with the statistics
    of the training set.
    """

    def __init__(self, weights, biases, mean, scale):
        self.weights = weights
        self.biases = biases
        self.mean = mean
        self.scale = scale

    @property
    def arrays(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def _forward(self, x):
        acts = [(np.asarray(x, dtype=np.float64) - self.mean) / self.scale]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = acts[-1] @ w + b
            acts.append(np.tanh(h) if i + 1 < len(self.weights) else h)
        return acts

    def logits(self, x):
        return self._forward(x)[-1]

    def predict(self, x):
        return np.argmax(self.logits(x), axis=1)

    def accuracy(self, data):
        if len(data) == 0:
            raise ConfigError('cannot compute accuracy on an empty set')
        return float(np.mean(self.predict(data.latents) == data.labels))


def _softmax(logits):
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def train_classifier(train, n_classes=None, steps=300, learning_rate=0.01,
                     hidden=32, seed=0):
    """ Train a Classifier with full-batch cross-entropy steps.

    Parameters:
        train (LabeledLatents): the training set, every class present.
        n_classes (int, optional): defaults to the largest label + 1.
        steps (int): number of full-batch optimizer steps.
        learning_rate (float): the optimizer step size.
        hidden (int): hidden width, 0 for a linear model.
        seed (int): seed of the weight initialization.
    """
    if len(train) == 0:
        raise ConfigError('train_classifier() needs a nonempty training set')
    n_classes = int(train.labels.max()) + 1 if n_classes is None else n_classes
    counts = train.counts(n_classes)
    if counts.shape[0] > n_classes or np.any(counts == 0):
        raise ConfigError('train_classifier() needs >= 1 sample of each of %i classes'
                          % n_classes)
    x, y = train.latents, train.labels
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[~(scale > 1e-12)] = 1.0

    rng = RngStream(seed, STREAM_EVAL)
    sizes = [x.shape[1]] + ([hidden] if hidden else []) + [n_classes]
    weights = [rng.normal((a, b)) / np.sqrt(a) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(b) for b in sizes[1:]]
    model = Classifier(weights, biases, mean, scale)

    onehot = np.zeros((len(train), n_classes))
    onehot[np.arange(len(train)), y] = 1.0
    state = init_optimizer(model.arrays, learning_rate)
    for step in range(steps):
        acts = model._forward(x)
        probs = _softmax(acts[-1])
        delta = (probs - onehot) / len(train)
        grads = []
        for i in reversed(range(len(model.weights))):
            grads[:0] = [acts[i].T @ delta, delta.sum(axis=0)]
            if i > 0:
                delta = (delta @ model.weights[i].T) * (1.0 - acts[i] ** 2)
        arrays, state = optimizer_step(model.arrays, grads, state, step=step)
        model.weights, model.biases = arrays[0::2], arrays[1::2]
    probs = _softmax(model.logits(x))[np.arange(len(train)), y]
    loss = -np.mean(np.log(probs + 1e-300))
    if not np.isfinite(loss):
        raise TrainingError('classifier diverged', step=steps)
    return model


## Metrics

class EvalReport:
    """ Evaluation metrics of a distilled set.

    Parameters:
        top1_accuracy (float): mean test accuracy over the classifier seeds.
        mode_coverage (float): fraction of covered mixture components.
        mean_nn_distance (float): mean test-to-distilled NN distance.
        per_seed (list): tuples (seed, accuracy).
    """

    __slots__ = ['top1_accuracy', 'mode_coverage', 'mean_nn_distance', 'per_seed']

    def __init__(self, top1_accuracy, mode_coverage, mean_nn_distance, per_seed=()):
        for name, val in [('top1_accuracy', top1_accuracy),
                          ('mode_coverage', mode_coverage)]:
            if not 0.0 <= val <= 1.0:
                raise DomainError('EvalReport %s must lie in [0, 1], got %r' %
                                  (name, val))
        if not (np.isfinite(mean_nn_distance) and mean_nn_distance >= 0):
            raise DomainError('EvalReport mean_nn_distance must be finite')
        self.top1_accuracy = float(top1_accuracy)
        self.mode_coverage = float(mode_coverage)
        self.mean_nn_distance = float(mean_nn_distance)
        self.per_seed = list(per_seed)

    def __repr__(self):
        return '<EvalReport acc=%.4f coverage=%.4f nn=%.4f>' % (
            self.top1_accuracy, self.mode_coverage, self.mean_nn_distance)

    def as_row(self):
        return [self.top1_accuracy, self.mode_coverage, self.mean_nn_distance]


def mode_coverage(distilled, spec, radius=COVERAGE_RADIUS):
    """ The fraction of components (over all classes) with at least one
    distilled sample of the same class within radius * std of the mean.
    """
    covered = 0
    limit = radius * spec.std
    for c in range(spec.n_classes):
        points = distilled.of_class(c)
        for j in range(spec.n_components):
            if points.shape[0]:
                d = np.linalg.norm(points - spec.means[c, j], axis=1)
                covered += bool(np.any(d <= limit))
    return covered / (spec.n_classes * spec.n_components)


def mean_nn_distance(distilled, test):
    """ Mean distance from each test point to its nearest distilled
    sample of the same class; all samples count when the class has none.
    """
    if len(test) == 0:
        return 0.0
    dists = np.empty(len(test))
    for c in test.classes():
        mask = test.labels == c
        ref = distilled.of_class(c)
        if ref.shape[0] == 0:
            ref = distilled.latents
        diff = test.latents[mask][:, None, :] - ref[None, :, :]
        dists[mask] = np.sqrt((diff * diff).sum(axis=2)).min(axis=1)
    return float(dists.mean())


def evaluate(distilled, test, gmm, config=None, seeds=(0, )):
    """ Evaluate a distilled set against the real test set and the
    mixture it was drawn from.

    Parameters:
        distilled (LabeledLatents): the distilled set, nonempty.
        test (LabeledLatents): the real test set.
        gmm (GmmSpec): the mixture.
        config (DistillConfig, optional): the classifier settings.
        seeds (sequence): classifier seeds; accuracy is averaged over them.
    """
    if len(distilled) == 0:
        raise ConfigError('evaluate() needs a nonempty distilled set')
    config = config or DistillConfig()
    per_seed = []
    for seed in seeds:
        model = train_classifier(distilled, gmm.n_classes, config.classifier_steps,
                                 config.classifier_learning_rate,
                                 config.classifier_hidden, seed)
        per_seed.append((int(seed), model.accuracy(test)))
    acc = float(np.mean([a for _, a in per_seed]))
    return EvalReport(acc, mode_coverage(distilled, gmm),
                      mean_nn_distance(distilled, test), per_seed)


def expected_random_coverage(weights, ipc, hit_probability=1.0):
    """ Expected mode coverage of ipc uniform draws (with replacement) per
    class: the mean over components of 1 - (1 - p*w)**ipc, where w is the
    component weight and p the chance that a draw of the component lands
    within the coverage radius (1 for a zero-spread mixture).
    """
    w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    return float(np.mean(1.0 - (1.0 - hit_probability * w) ** ipc))


## Result tables

ROW_METRICS = ['top1_accuracy', 'mode_coverage', 'mean_nn_distance']
ROW_TAIL = ['ipc', 'seed'] + ROW_METRICS + ['status', 'error']


class ResultTable:
    """ Rows of an experiment, keyed by the leading columns.
    """

    def __init__(self, header, rows=()):
        self.header = list(header)
        self.rows = [tuple(r) for r in rows]

    def __len__(self):
        return len(self.rows)

    def __repr__(self):
        return '<ResultTable %i rows: %s>' % (len(self), ', '.join(self.header))

    def column(self, name):
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def where(self, **values):
        idx = [(self.header.index(k), v) for k, v in values.items()]
        return ResultTable(self.header, [r for r in self.rows
                                         if all(r[i] == v for i, v in idx)])

    def summarize(self, group_by, metric='top1_accuracy'):
        """ Get a table with min, mean, max, std and count of a metric per
        group, over the rows with status ok.
        """
        gi = [self.header.index(k) for k in group_by]
        mi = self.header.index(metric)
        si = self.header.index('status')
        groups = {}
        for r in self.rows:
            key = tuple(r[i] for i in gi)
            groups.setdefault(key, ([], [0]))
            if r[si] == 'ok':
                groups[key][0].append(r[mi])
            else:
                groups[key][1][0] += 1
        rows = []
        for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
            vals, n_err = np.array(groups[key][0]), groups[key][1][0]
            if vals.size:
                stats = [vals.min(), vals.mean(), vals.max(), vals.std()]
            else:
                stats = [float('nan')] * 4
            rows.append(key + tuple(float(s) for s in stats) + (vals.size, n_err))
        header = list(group_by) + ['min', 'mean', 'max', 'std', 'n_ok', 'n_error']
        return ResultTable(header, rows)

    def write(self, filename):
        return write_csv(filename, self.header, self.rows)


def seeded_config(config, seed):
    """ The config of one repetition: all training seeds set to seed. The
    streams keep their purposes apart, and the benchmark stays fixed.
    """
    return config.replace(seed_data=seed, seed_init=seed, seed_noise=seed,
                          seed_sampling=seed)


def _error_rows(key, ipcs, seed, err):
    msg = '%s: %s' % (getattr(err, 'category', 'error'), err)
    nan = float('nan')
    return [key + (ipc, seed, nan, nan, nan, 'error', msg) for ipc in ipcs]


def run_seed(config, seed, cells, ipcs):
    """ Run all cells of an experiment for one seed, pretraining once.

    Parameters:
        config (DistillConfig): the base config.
        seed (int): the repetition seed.
        cells (list): tuples (key, kind, arg) with kind 'distill' (arg: a
            dict of config overrides), 'select' (arg: a baseline name) or
            'full' (the full training set).
        ipcs (list): the IPC settings.

    Returns:
        list: rows key + (ipc, seed, metrics..., status, error).
    """
    config = seeded_config(config, seed)
    train, test, spec = default_benchmark(config)
    pretrained = []
    rows = []
    for key, kind, arg in cells:
        try:
            if kind == 'full':
                report = evaluate(train, test, spec, config, [seed])
                rows.extend(key + (ipc, seed) + tuple(report.as_row()) + ('ok', '')
                            for ipc in ipcs)
                continue
            elif kind == 'select':
                for ipc in ipcs:
                    distilled = select(arg, train, ipc, config.n_classes, seed)
                    report = evaluate(distilled, test, spec, config, [seed])
                    rows.append(key + (ipc, seed) + tuple(report.as_row()) + ('ok', ''))
                continue
            if not pretrained:
                try:
                    pretrained.append(pretrain(config, train))
                except DistillError as err:
                    pretrained.append(err)
            if isinstance(pretrained[0], Exception):
                raise pretrained[0]
            cfg = config.replace(**arg)
            params = fine_tune(pretrained[0], cfg, train)
            for ipc in ipcs:
                distilled = generate_distilled(params, cfg, ipc=ipc)
                report = evaluate(distilled, test, spec, cfg, [seed])
                rows.append(key + (ipc, seed) + tuple(report.as_row()) + ('ok', ''))
        except DistillError as err:
            logger.warning('run %r seed %i failed: %s', key, seed, err)
            logger.debug(traceback.format_exc())
            done = set(r[len(key)] for r in rows if r[:len(key)] == key)
            rows.extend(_error_rows(key, [i for i in ipcs if i not in done], seed, err))
    return rows


def _run_seed_args(args):
    return run_seed(*args)


def run_grid(header, config, cells, ipcs, seeds=None, jobs=1):
    """ Run cells x ipcs x seeds, optionally over a pool of processes.
    Rows are sorted by their key, so the table does not depend on the
    order in which the runs finish.
    """
    if not cells:
        raise ConfigError('the experiment grid is empty')
    seeds = list(range(config.eval_seeds)) if seeds is None else list(seeds)
    ipcs = list(ipcs)
    if not seeds or not ipcs:
        raise ConfigError('need at least one seed and one ipc')
    args = [(config, seed, cells, ipcs) for seed in seeds]
    logger.info('Running %i cells x %i ipcs x %i seeds with %i job(s)',
                len(cells), len(ipcs), len(seeds), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(_run_seed_args, args))
    else:
        results = [_run_seed_args(a) for a in args]
    rows = [r for result in results for r in result]
    order = dict((c[0], i) for i, c in enumerate(cells))
    nk = len(header) - len(ROW_TAIL)
    rows.sort(key=lambda r: (order[r[:nk]], r[nk], r[nk + 1]))
    return ResultTable(header, rows)


## Experiments

ABLATION_CELLS = [('max', 'max'), ('max', 'min'), ('min', 'max'), ('min', 'min'),
                  ('oldest', 'oldest')]


def run_ablation(config, cells=None, ipcs=None, seeds=None, jobs=1):
    """ The eviction-policy ablation: one fine-tuning per (policy pair,
    seed), every IPC generated from that one model.

    Parameters:
        config (DistillConfig): the base config.
        cells (list, optional): (policy_real, policy_gen) pairs; default
            the four min/max combinations plus oldest/oldest.
        ipcs (list, optional): default config.ablation_ipcs.
        seeds (list, optional): default range(config.eval_seeds).
        jobs (int): number of worker processes.
    """
    cells = ABLATION_CELLS if cells is None else cells
    grid = [((pr, pg), 'distill', dict(policy_real=pr, policy_gen=pg))
            for pr, pg in cells]
    ipcs = config.ablation_ipcs if ipcs is None else ipcs
    return run_grid(['policy_real', 'policy_gen'] + ROW_TAIL, config, grid, ipcs,
                    seeds, jobs)


SWEEP_PARAMETERS = ('lambda_real', 'lambda_gen', 'capacity')


def run_sweep(parameter, values, config, seeds=None, jobs=1, ipc=None):
    """ Sweep one hyperparameter; 'capacity' sets both memory sizes.
    Use ``table.summarize(['parameter', 'value'])`` for min/mean/max.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError('cannot sweep %r, use one of %s' %
                          (parameter, ', '.join(SWEEP_PARAMETERS)))
    if not values:
        raise ConfigError('run_sweep() needs at least one value')
    grid = []
    for value in values:
        if parameter == 'capacity':
            if float(value) != int(value):
                raise ConfigError('capacity must be an integer, got %r' % (value, ))
            overrides = dict(capacity_real=int(value), capacity_gen=int(value))
        else:
            overrides = {parameter: float(value)}
        config.replace(**overrides)  # validate before starting
        grid.append(((parameter, value), 'distill', overrides))
    ipcs = [config.ipc if ipc is None else ipc]
    return run_grid(['parameter', 'value'] + ROW_TAIL, config, grid, ipcs, seeds, jobs)


def comparison_cells(config):
    """ The methods of the comparison table and how each is produced.
    """
    return [
        (('random', ), 'select', 'random'),
        (('k_center', ), 'select', 'k_center'),
        (('herding', ), 'select', 'herding'),
        (('diffusion_only', ), 'distill',
         dict(lambda_real=0.0, lambda_gen=0.0, policy_real='oldest',
              policy_gen='oldest')),
        (('minimax_fifo', ), 'distill',
         dict(lambda_real=config.lambda_real, lambda_gen=config.lambda_gen,
              policy_real='oldest', policy_gen='oldest')),
        (('full_method', ), 'distill',
         dict(lambda_real=config.lambda_real, lambda_gen=config.lambda_gen,
              policy_real='max', policy_gen='max')),
        (('full_dataset', ), 'full', None),
    ]


def run_comparison(config, ipcs=None, seeds=None, jobs=1, methods=None):
    """ Compare the distillation methods with the selection baselines and
    the full training set, one row per (method, ipc, seed).
    """
    cells = comparison_cells(config)
    if methods is not None:
        unknown = set(methods) - set(c[0][0] for c in cells)
        if unknown:
            raise ConfigError('unknown method(s) %s' % ', '.join(sorted(unknown)))
        cells = [c for c in cells if c[0][0] in methods]
    ipcs = config.ablation_ipcs if ipcs is None else ipcs
    return run_grid(['method'] + ROW_TAIL, config, cells, ipcs, seeds, jobs)


## Directional checks

CHECK_HEADER = ['check', 'ipc', 'value', 'reference', 'passed']


def _seed_values(table, metric, **key):
    rows = table.where(status='ok', **key)
    return dict(zip(rows.column('seed'), rows.column(metric)))


def comparison_checks(table):
    """ Check the orderings a comparison table is expected to show, per
    ipc: full_method covers at least as many modes as diffusion_only and
    minimax_fifo on average, strictly more than diffusion_only on all
    seeds but one, and is at least as accurate as diffusion_only on
    average. Methods missing from the table are not checked.

    Returns:
        ResultTable: rows (check, ipc, value, reference, passed).
    """
    rows = []
    for ipc in sorted(set(table.column('ipc'))):
        full = _seed_values(table, 'mode_coverage', method='full_method', ipc=ipc)
        if not full:
            continue
        base = _seed_values(table, 'mode_coverage', method='diffusion_only', ipc=ipc)
        fifo = _seed_values(table, 'mode_coverage', method='minimax_fifo', ipc=ipc)
        if base:
            seeds = sorted(set(full) & set(base))
            a = float(np.mean([full[s] for s in seeds]))
            b = float(np.mean([base[s] for s in seeds]))
            rows.append(('coverage_vs_diffusion_only', ipc, a, b, a >= b))
            strict = sum(full[s] > base[s] for s in seeds)
            need = max(1, len(seeds) - 1)
            rows.append(('coverage_strict_seeds', ipc, strict, need, strict >= need))
            full_acc = _seed_values(table, 'top1_accuracy', method='full_method',
                                    ipc=ipc)
            base_acc = _seed_values(table, 'top1_accuracy', method='diffusion_only',
                                    ipc=ipc)
            a = float(np.mean([full_acc[s] for s in seeds]))
            b = float(np.mean([base_acc[s] for s in seeds]))
            rows.append(('accuracy_vs_diffusion_only', ipc, a, b, a >= b))
        if fifo:
            seeds = sorted(set(full) & set(fifo))
            a = float(np.mean([full[s] for s in seeds]))
            b = float(np.mean([fifo[s] for s in seeds]))
            rows.append(('coverage_vs_minimax_fifo', ipc, a, b, a >= b))
    return ResultTable(CHECK_HEADER, rows)


def ablation_checks(table):
    """ Check that the max/max cell of an ablation table has the highest
    mean accuracy of the four min/max cells at some ipc, and is never
    the lowest.

    Returns:
        ResultTable: rows (check, ipc, value, reference, passed); the
        last row has an empty ipc and covers all settings.
    """
    grid = [(pr, pg) for pr in ('max', 'min') for pg in ('max', 'min')]
    rows = []
    n_best = 0
    for ipc in sorted(set(table.column('ipc'))):
        means = {}
        for pr, pg in grid:
            vals = _seed_values(table, 'top1_accuracy', policy_real=pr,
                                policy_gen=pg, ipc=ipc)
            if vals:
                means[(pr, pg)] = float(np.mean(list(vals.values())))
        if ('max', 'max') not in means or len(means) < 2:
            continue
        mine = means.pop(('max', 'max'))
        best, worst = max(means.values()), min(means.values())
        n_best += mine >= best
        rows.append(('max_max_not_worst', ipc, mine, worst, mine > worst))
    if rows:
        rows.append(('max_max_best_at_some_ipc', '', n_best, 1, n_best >= 1))
    return ResultTable(CHECK_HEADER, rows)
