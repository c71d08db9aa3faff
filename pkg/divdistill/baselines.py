"""
Selection baselines: distilled sets made of real training samples.

Each selector picks ``ipc`` distinct samples per class and returns them
as a LabeledLatents ordered by class.
"""

import numpy as np

from .base import ConfigError
from .numerics import RngStream, STREAM_EVAL


def _per_class(train, ipc, n_classes, pick):
    if ipc < 1:
        raise ConfigError('ipc must be >= 1, got %r' % ipc)
    indices = []
    for c in range(n_classes):
        members = np.flatnonzero(train.labels == c)
        if members.size < ipc:
            raise ConfigError('class %i has %i samples, cannot select %i' %
                              (c, members.size, ipc))
        chosen = pick(train.latents[members], c)
        indices.extend(members[np.asarray(chosen, dtype=np.int64)])
    return train.take(indices)


def select_random(train, ipc, n_classes, seed=0):
    """ A uniformly random subset of ipc samples per class.
    """
    rng = RngStream(seed, STREAM_EVAL)
    return _per_class(train, ipc, n_classes,
                      lambda x, c: rng.choice(x.shape[0], ipc, replace=False))


def k_center_indices(x, k, first):
    """ Greedy farthest-point selection: start at ``first``, then add the
    point farthest from all selected points until there are k.
    """
    chosen = [int(first)]
    dist = np.linalg.norm(x - x[first], axis=1)
    while len(chosen) < k:
        i = int(np.argmax(dist))
        chosen.append(i)
        dist = np.minimum(dist, np.linalg.norm(x - x[i], axis=1))
    return chosen


def select_k_center(train, ipc, n_classes, seed=0):
    """ Greedy k-center per class with a seeded random first center.
    """
    rng = RngStream(seed, STREAM_EVAL)
    return _per_class(train, ipc, n_classes,
                      lambda x, c: k_center_indices(x, ipc,
                                                    rng.integers(0, x.shape[0] - 1)))


def herding_indices(x, k):
    """ Kernel herding with a linear kernel and unique picks: greedily
    choose the points that keep the mean of the selection closest to
    the mean of the data.
    """
    kernel = x @ x.T
    mean_k = kernel.mean(axis=1)
    objective = mean_k.copy()
    chosen = []
    for t in range(k):
        i = int(np.argmax(objective))
        chosen.append(i)
        objective = objective * (t + 1) / (t + 2) + (mean_k - kernel[i]) / (t + 2)
        objective[chosen] = -np.inf
    return chosen


def select_herding(train, ipc, n_classes, seed=0):
    """ Herding per class. Deterministic; seed is accepted for a uniform
    selector signature.
    """
    return _per_class(train, ipc, n_classes, lambda x, c: herding_indices(x, ipc))


SELECTORS = {
    'random': select_random,
    'k_center': select_k_center,
    'herding': select_herding,
}


def select(method, train, ipc, n_classes, seed=0):
    try:
        selector = SELECTORS[method]
    except KeyError:
        raise ConfigError('unknown selection baseline %r, use one of %s' %
                          (method, ', '.join(sorted(SELECTORS))))
    return selector(train, ipc, n_classes, seed)
