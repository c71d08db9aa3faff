"""
Numeric substrate: latent vectors, cosine similarity, seeded random
streams and the adaptive-moment optimizer used by all training.

All arithmetic is float64. Random draws come from per-purpose streams
so that, say, changing the batch size does not perturb the noise used
for initialization or sampling.
"""

import numpy as np

from .base import ConfigError, DomainError, TrainingError


# Stream ids, one per logical purpose
STREAM_DATA = 0
STREAM_INIT = 1
STREAM_NOISE = 2
STREAM_SAMPLING = 3
STREAM_SHUFFLE = 4
STREAM_EVAL = 5


def as_latent(values, dim=None, name='latent'):
    """ Convert values to a finite 1D float64 array, optionally checking
    its dimension.
    """
    z = np.asarray(values, dtype=np.float64)
    if z.ndim != 1:
        raise ConfigError('%s must be a 1D vector, got shape %r' % (name, z.shape))
    if dim is not None and z.shape[0] != dim:
        raise ConfigError('%s has dimension %i, expected %i' %
                          (name, z.shape[0], dim))
    if not np.all(np.isfinite(z)):
        raise DomainError('%s has non-finite entries' % name)
    return z


class RngStream:
    """ A reproducible stream of random numbers, identified by a seed
    and a stream id. Equal (seed, stream_id) pairs yield identical draws
    on all platforms; the numpy PCG64 generator is seeded from a
    SeedSequence with the stream id as spawn key.

    Parameters:
        seed (int): the 64-bit seed.
        stream_id (int): the purpose of the stream (see STREAM_X constants).
    """

    __slots__ = ['seed', 'stream_id', 'generator']

    def __init__(self, seed, stream_id=0):
        seed, stream_id = int(seed), int(stream_id)
        if seed < 0 or stream_id < 0:
            raise ConfigError('RngStream seed and stream_id must be >= 0')
        self.seed = seed
        self.stream_id = stream_id
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id, ))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return '<RngStream seed=%i stream=%i>' % (self.seed, self.stream_id)

    def normal(self, shape):
        return self.generator.standard_normal(shape)

    def integers(self, low, high, size=None):
        """ Draw integers in the closed range [low, high].
        """
        return self.generator.integers(low, high, size=size, endpoint=True)

    def permutation(self, n):
        return self.generator.permutation(n)

    def choice(self, n, size, p=None, replace=True):
        return self.generator.choice(n, size=size, p=p, replace=replace)


def gaussian_draw(rng, d):
    """ Draw a latent of d independent standard-normal entries. Advancing
    the stream is the only state change.
    """
    if d < 1:
        raise ConfigError('gaussian_draw() needs d >= 1, got %r' % d)
    return rng.normal(int(d))


def gaussian_batch(rng, n, d):
    """ Draw n latents at once, shape (n, d).
    """
    if d < 1 or n < 0:
        raise ConfigError('gaussian_batch() needs n >= 0 and d >= 1')
    return rng.normal((int(n), int(d)))


## Cosine similarity

def cosine_similarity(a, b):
    """ Cosine similarity of two nonzero vectors, clamped to [-1, 1].
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError('cosine_similarity() got shapes %r and %r' %
                          (a.shape, b.shape))
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if not na > 0:
        raise DomainError("cosine_similarity() argument 'a' has zero norm")
    if not nb > 0:
        raise DomainError("cosine_similarity() argument 'b' has zero norm")
    s = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, s))


def cosine_gradient(a, b):
    """ Gradient of cosine_similarity(a, b) with respect to a.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if not (na > 0 and nb > 0):
        raise DomainError('cosine_gradient() needs nonzero vectors')
    s = np.dot(a, b) / (na * nb)
    return b / (na * nb) - s * a / (na * na)


def unit_rows(x, name='rows'):
    """ Normalize the rows of a 2D array to unit length. Zero rows are
    a domain error.
    """
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    if np.any(~(norms > 0)):
        i = int(np.argmin(norms))
        raise DomainError('%s: row %i has zero norm' % (name, i))
    return x / norms[:, None]


def cosine_matrix(x, y=None):
    """ Pairwise cosine similarities between the rows of x and y (or x
    itself), clamped to [-1, 1].
    """
    ux = unit_rows(x, 'cosine_matrix() x')
    uy = ux if y is None else unit_rows(y, 'cosine_matrix() y')
    return np.clip(ux @ uy.T, -1.0, 1.0)


## Optimizer

class OptimizerState:
    """ State of the adaptive-moment optimizer with decoupled weight decay.

    Parameters:
        first_moment (list): one array per parameter array.
        second_moment (list): one array per parameter array.
        step_count (int): number of updates performed so far.
        learning_rate (float): the step size.
        weight_decay (float): the decoupled decay coefficient.
    """

    __slots__ = ['first_moment', 'second_moment', 'step_count',
                 'learning_rate', 'weight_decay', 'beta1', 'beta2', 'eps']

    def __init__(self, first_moment, second_moment, step_count, learning_rate,
                 weight_decay=0.0, beta1=0.9, beta2=0.999, eps=1e-8):
        self.first_moment = first_moment
        self.second_moment = second_moment
        self.step_count = step_count
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def __repr__(self):
        return '<OptimizerState step=%i lr=%g>' % (self.step_count,
                                                   self.learning_rate)


def init_optimizer(params, learning_rate=1e-3, weight_decay=0.0):
    """ Create a fresh optimizer state for the given list of arrays.
    """
    if not (learning_rate > 0 and np.isfinite(learning_rate)):
        raise ConfigError('learning rate must be positive, got %r' % learning_rate)
    if not (weight_decay >= 0 and np.isfinite(weight_decay)):
        raise ConfigError('weight decay must be >= 0, got %r' % weight_decay)
    zeros = [np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params]
    return OptimizerState(zeros, [z.copy() for z in zeros], 0,
                          float(learning_rate), float(weight_decay))


def optimizer_step(params, grads, state, epoch=None, step=None):
    """ Apply one bias-corrected adaptive-moment update with decoupled
    weight decay. Does not modify its inputs.

    Parameters:
        params (list): the parameter arrays.
        grads (list): the gradients, same shapes as params.
        state (OptimizerState): the current optimizer state.
        epoch, step (int, optional): reported in a TrainingError.

    Returns:
        tuple: (new_params, new_state).
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ConfigError('optimizer_step() got %i params, %i grads and a state '
                          'for %i arrays' % (len(params), len(grads),
                                             len(state.first_moment)))
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ConfigError('optimizer_step() gradient shape %r does not match '
                              'parameter shape %r' % (np.shape(g), np.shape(p)))
        if not np.all(np.isfinite(g)):
            raise TrainingError('non-finite gradient', epoch=epoch, step=step)

    b1, b2 = state.beta1, state.beta2
    t = state.step_count + 1
    lr, wd = state.learning_rate, state.weight_decay
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p = p * (1.0 - lr * wd) - lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_params.append(p)
        new_m.append(m)
        new_v.append(v)
    new_state = OptimizerState(new_m, new_v, t, lr, wd, b1, b2, state.eps)
    return new_params, new_state
