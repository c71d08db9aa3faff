"""
The distillation losses.

The representativeness term pulls a generated latent toward the real
memory element it is least similar to, the diversity term pushes it away
from the generated memory element it is most similar to. Both are
combined with the diffusion loss into one quantity to minimize::

    total = diffusion - lambda_real * min_r cos(z_hat, r)
                      + lambda_gen * max_g cos(z_hat, g)

so ``real_term`` is stored negated and ``gen_term`` as is.
"""

import numpy as np

from .base import ConfigError, EmptyMemoryError
from .numerics import cosine_gradient, cosine_matrix


class LossWeights:
    """ The weights of the two memory terms.

    Parameters:
        lambda_real (float): weight of the representativeness term (>= 0).
        lambda_gen (float): weight of the diversity term (>= 0).
    """

    __slots__ = ['lambda_real', 'lambda_gen']

    def __init__(self, lambda_real=0.002, lambda_gen=0.008):
        for name, val in [('lambda_real', lambda_real), ('lambda_gen', lambda_gen)]:
            if not (np.isfinite(val) and val >= 0):
                raise ConfigError('%s must be finite and >= 0, got %r' % (name, val))
        self.lambda_real = float(lambda_real)
        self.lambda_gen = float(lambda_gen)

    def __repr__(self):
        return '<LossWeights real=%g gen=%g>' % (self.lambda_real, self.lambda_gen)

    def __eq__(self, other):
        return (isinstance(other, LossWeights) and
                (self.lambda_real, self.lambda_gen) ==
                (other.lambda_real, other.lambda_gen))

    def scaled(self, k):
        return LossWeights(self.lambda_real * k, self.lambda_gen * k)


class LossBreakdown:
    """ The terms of the combined loss, retained for logging.
    """

    __slots__ = ['diffusion', 'real_term', 'gen_term', 'total',
                 'selected_real_index', 'selected_gen_index']

    def __init__(self, diffusion, real_term, gen_term, total,
                 selected_real_index=None, selected_gen_index=None):
        self.diffusion = diffusion
        self.real_term = real_term
        self.gen_term = gen_term
        self.total = total
        self.selected_real_index = selected_real_index
        self.selected_gen_index = selected_gen_index

    def __repr__(self):
        return ('<LossBreakdown total=%g diffusion=%g real=%g gen=%g>' %
                (self.total, self.diffusion, self.real_term, self.gen_term))


def combined_loss(diff, rl, gl, w):
    """ Combine the diffusion loss and the two memory terms.

    Parameters:
        diff (float): the diffusion loss.
        rl (float): the real term (the negated minimum similarity).
        gl (float): the generative term (the maximum similarity).
        w (LossWeights): the weights.

    Returns:
        LossBreakdown: with total = diff + lambda_real*rl + lambda_gen*gl.
    """
    for name, val in [('diff', diff), ('rl', rl), ('gl', gl)]:
        if not np.isfinite(val):
            raise ConfigError('combined_loss() got non-finite %s' % name)
    total = diff + w.lambda_real * rl + w.lambda_gen * gl
    return LossBreakdown(float(diff), float(rl), float(gl), float(total))


def selected_term(z_hat, memory, mode):
    """ Select the memory element with the extreme similarity to z_hat.

    Returns:
        tuple: (similarity, index, gradient of the similarity w.r.t. z_hat),
        or (0.0, None, None) if the memory is empty.
    """
    try:
        index, value = memory.extreme_similarity(z_hat, mode)
    except EmptyMemoryError:
        return 0.0, None, None
    grad = cosine_gradient(z_hat, memory.latent_at(index))
    return value, index, grad


def real_loss(z_hat, m_real):
    """ The representativeness term: minus the smallest similarity between
    z_hat and the real memory. Minimizing it pulls z_hat toward its least
    similar real latent.

    Returns:
        tuple: (value, selected index), or (0.0, None) for an empty memory.
    """
    value, index, _ = selected_term(z_hat, m_real, 'min')
    if index is None:
        return 0.0, None
    return -value, index


def gen_loss(z_hat, m_gen):
    """ The diversity term: the largest similarity between z_hat and the
    generated memory. Minimizing it pushes z_hat away from its most similar
    generated latent.

    Returns:
        tuple: (value, selected index), or (0.0, None) for an empty memory.
    """
    value, index, _ = selected_term(z_hat, m_gen, 'max')
    if index is None:
        return 0.0, None
    return value, index


def naive_alignment(z_hat, dataset):
    """ Sum of similarities between z_hat and every latent in a dataset.

    Only used as a diagnostic: aligning against mini-batches instead of
    the full set draws the generated latents toward the data center.
    """
    dataset = np.asarray(dataset, dtype=np.float64)
    if dataset.ndim != 2 or dataset.shape[0] == 0:
        raise ConfigError('naive_alignment() needs a nonempty dataset')
    z_hat = np.asarray(z_hat, dtype=np.float64)
    return float(cosine_matrix(z_hat[None], dataset).sum())


class BatchLoss:
    """ Per-element loss terms of a batch, as produced by
    ``diffusion.loss_and_gradient()``. Elements whose clean-latent
    estimate has zero norm are marked invalid; their memory terms are 0.
    """

    def __init__(self, labels, z_hat, diffusion):
        n = len(labels)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.z_hat = z_hat
        self.diffusion = np.asarray(diffusion, dtype=np.float64)
        self.real_term = np.zeros(n)
        self.gen_term = np.zeros(n)
        self.real_index = np.full(n, -1, dtype=np.int64)
        self.gen_index = np.full(n, -1, dtype=np.int64)
        self.valid = np.linalg.norm(z_hat, axis=1) > 0

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_invalid(self):
        return int(np.sum(~self.valid))

    def _breakdown(self, mask, weights):
        b = combined_loss(self.diffusion[mask].mean(), self.real_term[mask].mean(),
                          self.gen_term[mask].mean(), weights)
        if mask.sum() == 1:
            i = int(np.flatnonzero(mask)[0])
            if self.real_index[i] >= 0:
                b.selected_real_index = int(self.real_index[i])
            if self.gen_index[i] >= 0:
                b.selected_gen_index = int(self.gen_index[i])
        return b

    def mean_breakdown(self, weights):
        """ The breakdown of the batch loss (means over all elements).
        """
        return self._breakdown(np.ones(len(self), bool), weights)

    def class_breakdowns(self, weights):
        """ Get a list of (label, LossBreakdown) with the means over the
        elements of each class present in the batch.
        """
        out = []
        for label in sorted(set(int(i) for i in self.labels)):
            out.append((label, self._breakdown(self.labels == label, weights)))
        return out
