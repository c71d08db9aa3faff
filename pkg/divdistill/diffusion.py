"""
A toy class-conditional latent diffusion model.

The encoder is the identity on synthetic latents and the class encoder
is a one-hot map, so a latent ``z0`` is the data point itself. The noise
predictor is a small fully connected network with tanh hidden layers,
taking ``z_t``, sinusoidal features of ``t/T`` and the one-hot class
embedding. Its gradients are computed by hand (no autodiff) and are
checked against central differences in the test suite.

The clean-latent estimate ``z_hat`` used by the diversity losses is the
one-step inverse of the forward noising with the predicted noise::

    z_t   = sqrt(a_t) * z0 + sqrt(1 - a_t) * eps
    z_hat = (z_t - sqrt(1 - a_t) * eps_hat) / sqrt(a_t)

where ``a_t`` is the cumulative product alpha_bar at step t.
"""

import numpy as np

from . import logger
from .base import ConfigError, StepRangeError, SamplingError, TrainingError
from .numerics import gaussian_batch
from .objectives import BatchLoss, selected_term


class VarianceSchedule:
    """ The cumulative noise-retention coefficients alpha_bar_t for
    t = 1..T. Index ``t`` is one-based throughout.

    Parameters:
        alpha_bar (sequence): strictly decreasing values in (0, 1).
        betas (sequence, optional): the per-step betas, if known.
    """

    __slots__ = ['alpha_bar', 'betas']

    def __init__(self, alpha_bar, betas=None):
        alpha_bar = np.asarray(alpha_bar, dtype=np.float64)
        if alpha_bar.ndim != 1 or alpha_bar.size < 1:
            raise ConfigError('VarianceSchedule needs a nonempty 1D alpha_bar')
        if not np.all((alpha_bar > 0) & (alpha_bar < 1)):
            raise ConfigError('VarianceSchedule alpha_bar must lie in (0, 1)')
        if np.any(np.diff(alpha_bar) >= 0):
            raise ConfigError('VarianceSchedule alpha_bar must be strictly '
                              'decreasing')
        self.alpha_bar = alpha_bar
        self.betas = None if betas is None else np.asarray(betas, np.float64)

    def __repr__(self):
        return '<VarianceSchedule T=%i alpha_bar_T=%g>' % (self.n_steps,
                                                          self.alpha_bar[-1])

    @property
    def n_steps(self):
        return self.alpha_bar.shape[0]

    def check_step(self, t):
        """ Check that t (int or int array) lies in 1..T.
        """
        t = np.asarray(t)
        if t.size and (np.any(t < 1) or np.any(t > self.n_steps)):
            raise StepRangeError('timestep %s outside 1..%i' %
                                 (t.tolist(), self.n_steps))

    def at(self, t):
        """ Get alpha_bar_t for t (int or int array).
        """
        self.check_step(t)
        return self.alpha_bar[np.asarray(t, dtype=np.int64) - 1]


def make_schedule(T=1000, beta_start=1e-4, beta_end=0.02):
    """ Create a schedule with linearly interpolated betas.

    Parameters:
        T (int): number of diffusion steps, at least 2.
        beta_start (float): beta at t=1.
        beta_end (float): beta at t=T.
    """
    if int(T) != T or T < 2:
        raise ConfigError('make_schedule() needs an integer T >= 2, got %r' % T)
    if not (0 < beta_start <= beta_end < 1):
        raise ConfigError('make_schedule() needs 0 < beta_start <= beta_end < 1, '
                          'got %r and %r' % (beta_start, beta_end))
    betas = np.linspace(beta_start, beta_end, int(T))
    return VarianceSchedule(np.cumprod(1.0 - betas), betas)


def time_features(t, n_steps, n_features=8):
    """ Sinusoidal features of t/T, shape (n_features, ) or (n, n_features)
    for array input. The first half are sines, the second half cosines,
    with frequencies pi * 2**k.
    """
    if n_features % 2:
        raise ConfigError('time_features() needs an even number of features')
    s = np.asarray(t, dtype=np.float64) / float(n_steps)
    freqs = np.pi * 2.0 ** np.arange(n_features // 2)
    angles = s[..., None] * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)


class ConditioningVector:
    """ The conditioning of the noise predictor: a one-hot embedding of
    the class label. The time embedding is added per evaluation.

    Parameters:
        label (int): the class label y.
        n_classes (int): the number of classes.
    """

    __slots__ = ['label', 'n_classes', 'embedding']

    def __init__(self, label, n_classes):
        label, n_classes = int(label), int(n_classes)
        if not 0 <= label < n_classes:
            raise ConfigError('class label %i outside 0..%i' % (label, n_classes - 1))
        self.label = label
        self.n_classes = n_classes
        self.embedding = np.zeros(n_classes)
        self.embedding[label] = 1.0

    def __repr__(self):
        return '<ConditioningVector class %i of %i>' % (self.label, self.n_classes)

    def time_embedding(self, t, n_steps, n_features=8):
        return time_features(t, n_steps, n_features)


class DenoiserParams:
    """ Weights and biases of the noise predictor, plus the architecture
    they belong to. Input is (z_t, time features, one-hot class), output
    is the predicted noise of dimension latent_dim.

    Parameters:
        weights (list): arrays of shape (fan_in, fan_out), one per layer.
        biases (list): arrays of shape (fan_out, ), one per layer.
        latent_dim (int): the latent dimension d.
        n_classes (int): the number of classes.
        n_steps (int): the T of the schedule the net is trained for.
        n_time_features (int): the number of sinusoidal time features.
    """

    __slots__ = ['weights', 'biases', 'latent_dim', 'n_classes', 'n_steps',
                 'n_time_features']

    def __init__(self, weights, biases, latent_dim, n_classes, n_steps,
                 n_time_features=8):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.latent_dim = int(latent_dim)
        self.n_classes = int(n_classes)
        self.n_steps = int(n_steps)
        self.n_time_features = int(n_time_features)
        self._check()

    def _check(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError('DenoiserParams needs matching weights and biases')
        fan_in = self.input_dim
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or w.shape[0] != fan_in or b.shape != (w.shape[1], ):
                raise ConfigError('DenoiserParams layer shapes are inconsistent')
            fan_in = w.shape[1]
        if fan_in != self.latent_dim:
            raise ConfigError('DenoiserParams output dimension %i differs from '
                              'latent dimension %i' % (fan_in, self.latent_dim))

    def __repr__(self):
        return '<DenoiserParams d=%i classes=%i hidden=%r>' % (
            self.latent_dim, self.n_classes, self.hidden)

    @property
    def input_dim(self):
        return self.latent_dim + self.n_time_features + self.n_classes

    @property
    def hidden(self):
        return tuple(w.shape[1] for w in self.weights[:-1])

    @property
    def arrays(self):
        """ The parameter arrays in optimizer order: w0, b0, w1, b1, ...
        """
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def with_arrays(self, arrays):
        """ Get a new DenoiserParams with the same architecture and the
        given arrays (in the order of ``arrays``).
        """
        return DenoiserParams(arrays[0::2], arrays[1::2], self.latent_dim,
                              self.n_classes, self.n_steps, self.n_time_features)

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays)


def init_denoiser(latent_dim, n_classes, n_steps, rng, hidden=(64, 64),
                  n_time_features=8):
    """ Create randomly initialized DenoiserParams. Weights are drawn with
    variance 1/fan_in, biases start at zero.
    """
    if latent_dim < 1 or n_classes < 1:
        raise ConfigError('init_denoiser() needs latent_dim and n_classes >= 1')
    sizes = [latent_dim + n_time_features + n_classes] + list(hidden) + [latent_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal((fan_in, fan_out)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return DenoiserParams(weights, biases, latent_dim, n_classes, n_steps,
                          n_time_features)


def _net_input(params, z_t, ts, labels):
    onehot = np.zeros((z_t.shape[0], params.n_classes))
    onehot[np.arange(z_t.shape[0]), labels] = 1.0
    tf = time_features(ts, params.n_steps, params.n_time_features)
    return np.concatenate([z_t, tf, onehot], axis=1)


def _forward(params, x):
    activations = [x]
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i < last:
            h = np.tanh(h)
        activations.append(h)
    return h, activations


def _backward(params, activations, d_out):
    """ Backpropagate d_out (gradient w.r.t. the network output) and
    return the gradients in ``params.arrays`` order.
    """
    n_layers = len(params.weights)
    grads = [None] * (2 * n_layers)
    delta = d_out
    for i in reversed(range(n_layers)):
        a_prev = activations[i]
        grads[2 * i] = a_prev.T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * (1.0 - a_prev * a_prev)
    return grads


def _check_inputs(params, z_t, ts, labels):
    if z_t.ndim != 2 or z_t.shape[1] != params.latent_dim:
        raise ConfigError('denoiser input has shape %r, expected (n, %i)' %
                          (z_t.shape, params.latent_dim))
    if ts.shape != (z_t.shape[0], ) or labels.shape != (z_t.shape[0], ):
        raise ConfigError('denoiser got %i latents but %i steps and %i labels' %
                          (z_t.shape[0], ts.size, labels.size))
    if ts.size and (ts.min() < 1 or ts.max() > params.n_steps):
        raise StepRangeError('timestep outside 1..%i' % params.n_steps)
    if labels.size and (labels.min() < 0 or labels.max() >= params.n_classes):
        raise ConfigError('class label outside 0..%i' % (params.n_classes - 1))


def denoiser_forward_batch(params, z_t, ts, labels):
    """ Predict the noise for a batch.

    Parameters:
        params (DenoiserParams): the network.
        z_t (array): noisy latents, shape (n, d).
        ts (array): integer timesteps, shape (n, ).
        labels (array): integer class labels, shape (n, ).

    Returns:
        array: predicted noise, shape (n, d).
    """
    z_t = np.asarray(z_t, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    _check_inputs(params, z_t, ts, labels)
    out, _ = _forward(params, _net_input(params, z_t, ts, labels))
    return out


def denoiser_forward(params, z_t, t, c):
    """ Predict the noise in a single noisy latent.

    Parameters:
        params (DenoiserParams): the network.
        z_t (array): the noisy latent, shape (d, ).
        t (int): the timestep.
        c (ConditioningVector): the class conditioning.
    """
    z_t = np.asarray(z_t, dtype=np.float64)
    if z_t.shape != (params.latent_dim, ):
        raise ConfigError('denoiser_forward() latent has shape %r, expected (%i,)'
                          % (z_t.shape, params.latent_dim))
    if c.n_classes != params.n_classes:
        raise ConfigError('denoiser_forward() conditioning has %i classes, the '
                          'network %i' % (c.n_classes, params.n_classes))
    return denoiser_forward_batch(params, z_t[None], [t], [c.label])[0]


def forward_noise(z0, t, eps, sched):
    """ Noise a clean latent to step t (works on single latents or on
    batches with an array of steps).
    """
    a = sched.at(t)
    z0 = np.asarray(z0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if np.ndim(a):
        a = a[:, None]
    return np.sqrt(a) * z0 + np.sqrt(1.0 - a) * eps


def predict_z0(z_t, t, eps_hat, sched):
    """ The clean-latent estimate implied by the predicted noise; the
    exact inverse of forward_noise when eps_hat is the true noise.
    """
    a = sched.at(t)
    z_t = np.asarray(z_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if np.ndim(a):
        a = a[:, None]
    return (z_t - np.sqrt(1.0 - a) * eps_hat) / np.sqrt(a)


def diffusion_loss(eps_hat, eps):
    """ Squared L2 distance between predicted and true noise.
    """
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if eps_hat.shape != eps.shape:
        raise ConfigError('diffusion_loss() got shapes %r and %r' %
                          (eps_hat.shape, eps.shape))
    d = eps_hat - eps
    return float(np.dot(d.ravel(), d.ravel()))


## Sampling

def sampling_timesteps(n_steps, steps):
    """ The evenly strided, strictly decreasing subsequence of 1..T
    visited by the sampler, starting at T.
    """
    if int(steps) != steps or not 1 <= steps <= n_steps:
        raise ConfigError('sampling steps must lie in 1..%i, got %r' %
                          (n_steps, steps))
    if steps == 1:
        return np.array([n_steps], dtype=np.int64)
    ts = np.rint(np.linspace(n_steps, 1, int(steps))).astype(np.int64)
    assert np.all(np.diff(ts) < 0)
    return ts


def sample_batch(params, labels, steps, rng, sched):
    """ Generate one latent per label with the deterministic (noise-free)
    sampler. The initial noise is the only random input, drawn from rng
    as one (n, d) block.

    Parameters:
        params (DenoiserParams): the network.
        labels (array): the class label per sample.
        steps (int): number of denoising steps, 1..T.
        rng (RngStream): the sampling stream.
        sched (VarianceSchedule): the schedule.

    Returns:
        array: shape (n, d).
    """
    labels = np.asarray(labels, dtype=np.int64)
    ts = sampling_timesteps(sched.n_steps, steps)
    x = gaussian_batch(rng, labels.shape[0], params.latent_dim)
    if labels.shape[0] == 0:
        return x
    z0 = x
    for i, t in enumerate(ts):
        t_arr = np.full(labels.shape, t, dtype=np.int64)
        eps_hat = denoiser_forward_batch(params, x, t_arr, labels)
        z0 = predict_z0(x, t, eps_hat, sched)
        if i + 1 < len(ts):
            a_next = sched.at(ts[i + 1])
            x = np.sqrt(a_next) * z0 + np.sqrt(1.0 - a_next) * eps_hat
        else:
            x = z0
        if not np.all(np.isfinite(x)):
            raise SamplingError('non-finite latent', step=i)
    return x


def sample(params, c, steps, rng, sched):
    """ Generate a single latent for the conditioning c.
    """
    return sample_batch(params, [c.label], steps, rng, sched)[0]


## Training loss and its gradient

class TrainingBatch:
    """ A batch of clean latents with their labels and the timesteps and
    noise drawn for them.
    """

    __slots__ = ['z0', 'labels', 'ts', 'eps']

    def __init__(self, z0, labels, ts, eps):
        self.z0 = np.asarray(z0, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.ts = np.asarray(ts, dtype=np.int64)
        self.eps = np.asarray(eps, dtype=np.float64)
        n = self.z0.shape[0]
        if n == 0:
            raise ConfigError('TrainingBatch must be nonempty')
        if (self.labels.shape != (n, ) or self.ts.shape != (n, ) or
                self.eps.shape != self.z0.shape):
            raise ConfigError('TrainingBatch arrays have inconsistent shapes')

    def __len__(self):
        return self.z0.shape[0]


def draw_batch(z0, labels, sched, rng):
    """ Draw uniform timesteps and Gaussian noise for a batch of clean
    latents from the noise stream.
    """
    z0 = np.asarray(z0, dtype=np.float64)
    n = z0.shape[0]
    ts = rng.integers(1, sched.n_steps, size=n)
    eps = gaussian_batch(rng, n, z0.shape[1])
    return TrainingBatch(z0, labels, ts, eps)


def loss_and_gradient(params, batch, memories, weights, sched, epoch=None,
                      step=None):
    """ Evaluate the combined loss on a batch and its gradient with respect
    to the network parameters.

    The batch loss is the mean over elements of::

        |eps_hat - eps|^2 - lambda_real * min_r cos(z_hat, r)
                          + lambda_gen * max_g cos(z_hat, g)

    where r and g run over the element's real and generated memories.
    Only the selected memory element carries gradient, and the memory
    contents are constants.

    Parameters:
        params (DenoiserParams): the network.
        batch (TrainingBatch): the batch.
        memories (MemoryBank or None): the memories; None or empty
            memories make the similarity terms vanish.
        weights (LossWeights): lambda_real and lambda_gen.
        sched (VarianceSchedule): the schedule.
        epoch, step (int, optional): reported in a TrainingError.

    Returns:
        tuple: (BatchLoss, grads) with grads in ``params.arrays`` order.
    """
    sched.check_step(batch.ts)
    n = len(batch)
    z_t = forward_noise(batch.z0, batch.ts, batch.eps, sched)
    _check_inputs(params, z_t, batch.ts, batch.labels)
    eps_hat, activations = _forward(params, _net_input(params, z_t, batch.ts,
                                                       batch.labels))
    z_hat = predict_z0(z_t, batch.ts, eps_hat, sched)
    a = sched.at(batch.ts)

    diff = eps_hat - batch.eps
    loss = BatchLoss(batch.labels, z_hat, np.sum(diff * diff, axis=1))
    d_eps_hat = 2.0 * diff

    if memories is not None:
        # dz_hat/deps_hat = -sqrt(1 - a) / sqrt(a) per element
        scale = -np.sqrt(1.0 - a) / np.sqrt(a)
        for i in range(n):
            if not loss.valid[i]:
                continue
            label = int(batch.labels[i])
            d_zhat = None
            value, index, grad = selected_term(z_hat[i], memories.real(label), 'min')
            if index is not None:
                loss.real_term[i], loss.real_index[i] = -value, index
                if weights.lambda_real != 0:
                    d_zhat = -weights.lambda_real * grad
            value, index, grad = selected_term(z_hat[i], memories.gen(label), 'max')
            if index is not None:
                loss.gen_term[i], loss.gen_index[i] = value, index
                if weights.lambda_gen != 0:
                    g = weights.lambda_gen * grad
                    d_zhat = g if d_zhat is None else d_zhat + g
            if d_zhat is not None:
                d_eps_hat[i] += scale[i] * d_zhat

    if not np.all(np.isfinite(loss.diffusion)):
        raise TrainingError('non-finite diffusion loss', epoch=epoch, step=step)
    grads = _backward(params, activations, d_eps_hat / n)
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError('non-finite gradient', epoch=epoch, step=step)
    if loss.n_invalid:
        logger.debug('%i clean-latent estimates with zero norm in batch',
                     loss.n_invalid)
    return loss, grads


def loss_gradient(params, batch, memories, weights, sched):
    """ Gradient of the combined loss with respect to the parameters, in
    ``params.arrays`` order. See loss_and_gradient().
    """
    return loss_and_gradient(params, batch, memories, weights, sched)[1]


def batch_loss_value(params, batch, memories, weights, sched):
    """ The scalar batch loss (mean of per-element totals); the function
    whose gradient loss_gradient() computes.
    """
    loss, _ = loss_and_gradient(params, batch, memories, weights, sched)
    return loss.mean_breakdown(weights).total

