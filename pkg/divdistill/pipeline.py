"""
The distillation pipeline: pretraining the toy diffusion model on the
real latents, fine-tuning it with the memory losses, and generating the
distilled set.

One distillation step on a batch:

1. draw a timestep and noise per element and noise the real latents,
2. compute the combined loss and its gradient, with the similarity
   terms measured against the memories as they were before the step,
3. update the parameters,
4. enqueue every real latent into its real memory and every valid
   clean-latent estimate into its generated memory, evicting as needed.

All randomness comes from seeded streams (see numerics.RngStream), so
equal configs give bit-identical runs.
"""

import numpy as np

from . import logger
from .base import ConfigError, DomainError, LabeledLatents
from .numerics import (RngStream, STREAM_INIT, STREAM_NOISE, STREAM_SAMPLING,
                       STREAM_SHUFFLE, init_optimizer, optimizer_step)
from .diffusion import (make_schedule, init_denoiser, draw_batch,
                        loss_and_gradient, sample_batch)
from .memory import MemoryBank
from .objectives import LossWeights

# Pretraining draws from its own streams, so that changing the number of
# pretraining epochs does not shift the noise of the fine-tuning.
PRETRAIN_STREAM_OFFSET = 16


class RunArtifacts:
    """ The outputs of a distillation run.

    Parameters:
        params (DenoiserParams): the fine-tuned network.
        distilled (LabeledLatents): the distilled set, ipc per class.
        train_log (list): rows (step, epoch, class, diffusion, real_term,
            gen_term, total) with the per-class batch means.
        snapshots (list): memory snapshots after every epoch, tuples
            (epoch, kind, key, insertion indices, latents).
        pretrain_history (list, optional): mean diffusion loss per
            pretraining epoch.
    """

    def __init__(self, params, distilled, train_log, snapshots,
                 pretrain_history=None):
        self.params = params
        self.distilled = distilled
        self.train_log = train_log
        self.snapshots = snapshots
        self.pretrain_history = pretrain_history

    def __repr__(self):
        return '<RunArtifacts %i distilled, %i log rows>' % (
            len(self.distilled), len(self.train_log))


def build_schedule(config):
    return make_schedule(config.diffusion_steps, config.beta_start, config.beta_end)


def check_dataset(config, dataset):
    """ Check that a dataset matches the config and has every class.
    """
    if len(dataset) == 0:
        raise ConfigError('the dataset is empty')
    if dataset.dim != config.latent_dim:
        raise ConfigError('dataset has latent dimension %i, config says %i' %
                          (dataset.dim, config.latent_dim))
    labels = dataset.labels
    if labels.min() < 0 or labels.max() >= config.n_classes:
        raise ConfigError('dataset labels must lie in 0..%i' % (config.n_classes - 1))
    counts = dataset.counts(config.n_classes)
    if np.any(counts == 0):
        missing = [int(i) for i in np.flatnonzero(counts == 0)]
        raise ConfigError('dataset has no samples for class(es) %r' % missing)


def init_params(config):
    """ The random initialization of the network, from the init stream.
    """
    rng = RngStream(config.seed_init, STREAM_INIT)
    return init_denoiser(config.latent_dim, config.n_classes,
                         config.diffusion_steps, rng, config.hidden,
                         config.time_features)


def iter_batches(n, batch_size, rng):
    """ Yield index arrays of a seeded shuffle of range(n), in chunks
    of batch_size (the last one may be smaller).
    """
    order = rng.permutation(n)
    for i in range(0, n, batch_size):
        yield order[i:i + batch_size]


def pretrain(config, dataset, history=None):
    """ Train a freshly initialized network with the pure diffusion loss.

    Parameters:
        config (DistillConfig): uses the pretrain_* keys, the network keys
            and the seeds.
        dataset (LabeledLatents): the real training latents.
        history (list, optional): receives the mean loss of every epoch.

    Returns:
        DenoiserParams: the pretrained network; with 0 pretraining epochs
        the random initialization.
    """
    check_dataset(config, dataset)
    sched = build_schedule(config)
    params = init_params(config)
    if config.pretrain_epochs == 0:
        return params

    no_memory = LossWeights(0.0, 0.0)
    state = init_optimizer(params.arrays, config.pretrain_learning_rate,
                           config.weight_decay)
    noise_rng = RngStream(config.seed_noise, STREAM_NOISE + PRETRAIN_STREAM_OFFSET)
    shuffle_rng = RngStream(config.seed_data, STREAM_SHUFFLE + PRETRAIN_STREAM_OFFSET)

    logger.info('Pretraining for %i epochs on %i latents',
                config.pretrain_epochs, len(dataset))
    step = 0
    epoch_losses = []
    for epoch in range(1, config.pretrain_epochs + 1):
        total, count = 0.0, 0
        for idx in iter_batches(len(dataset), config.pretrain_batch_size, shuffle_rng):
            batch = draw_batch(dataset.latents[idx], dataset.labels[idx], sched,
                               noise_rng)
            loss, grads = loss_and_gradient(params, batch, None, no_memory, sched,
                                            epoch, step)
            arrays, state = optimizer_step(params.arrays, grads, state, epoch, step)
            params = params.with_arrays(arrays)
            total += float(loss.diffusion.sum())
            count += len(batch)
            step += 1
        epoch_losses.append(total / count)
        logger.debug('pretrain epoch %i: diffusion loss %.5f', epoch, epoch_losses[-1])

    logger.info('Pretraining done: diffusion loss %.5f -> %.5f',
                epoch_losses[0], epoch_losses[-1])
    if history is not None:
        history.extend(epoch_losses)
    return params


def update_memories(bank, batch, loss):
    """ Enqueue the real latents and valid clean-latent estimates of a
    batch into the memories of their class, element by element.
    """
    for i in range(len(batch)):
        label = int(batch.labels[i])
        try:
            bank.real(label).enqueue(batch.z0[i])
        except DomainError:
            logger.warning('skipping a zero-norm real latent of class %i', label)
        if loss.valid[i]:
            bank.gen(label).enqueue(loss.z_hat[i])
        else:
            logger.warning('skipping a zero-norm clean-latent estimate of class %i',
                           label)


def snapshot_bank(bank, epoch):
    """ Get the snapshot tuples (epoch, kind, key, insertion indices,
    latents) of all memories in a bank.
    """
    out = []
    for key, real, gen in bank.pairs():
        out.append((epoch, 'real', key, real.insertion_indices, real.latents))
        out.append((epoch, 'gen', key, gen.insertion_indices, gen.latents))
    return out


def make_bank(config):
    return MemoryBank(config.n_classes, config.capacity_real, config.capacity_gen,
                      config.policy_real, config.policy_gen,
                      config.per_class_memory)


def fine_tune(params, config, dataset, train_log=None, snapshots=None):
    """ Run the memory-driven fine-tuning loop and return the fine-tuned
    parameters. Log rows and snapshots are appended to the given lists.
    """
    check_dataset(config, dataset)
    sched = build_schedule(config)
    if params.n_steps != sched.n_steps:
        raise ConfigError('network was trained for T=%i, config has T=%i' %
                          (params.n_steps, sched.n_steps))
    weights = config.weights
    bank = make_bank(config)
    state = init_optimizer(params.arrays, config.learning_rate, config.weight_decay)
    noise_rng = RngStream(config.seed_noise, STREAM_NOISE)
    shuffle_rng = RngStream(config.seed_data, STREAM_SHUFFLE)
    train_log = [] if train_log is None else train_log
    snapshots = [] if snapshots is None else snapshots

    logger.info('Distilling for %i epochs (lambda_real=%g, lambda_gen=%g, '
                'policies %s/%s)', config.epochs, weights.lambda_real,
                weights.lambda_gen, config.policy_real, config.policy_gen)
    step = 0
    for epoch in range(1, config.epochs + 1):
        sums = np.zeros(4)
        n_batches = 0
        for idx in iter_batches(len(dataset), config.batch_size, shuffle_rng):
            batch = draw_batch(dataset.latents[idx], dataset.labels[idx], sched,
                               noise_rng)
            loss, grads = loss_and_gradient(params, batch, bank, weights, sched,
                                            epoch, step)
            arrays, state = optimizer_step(params.arrays, grads, state, epoch, step)
            params = params.with_arrays(arrays)
            update_memories(bank, batch, loss)
            for label, b in loss.class_breakdowns(weights):
                train_log.append((step, epoch, label, b.diffusion, b.real_term,
                                  b.gen_term, b.total))
            b = loss.mean_breakdown(weights)
            sums += (b.diffusion, b.real_term, b.gen_term, b.total)
            n_batches += 1
            step += 1
        snapshots.extend(snapshot_bank(bank, epoch))
        means = sums / n_batches
        logger.info('epoch %i: total %.5f, diffusion %.5f, real %.4f, gen %.4f, '
                    'largest memory %i', epoch, means[3], means[0], means[1],
                    means[2], bank.max_size())
    return params


def generate_distilled(params, config, sched=None, ipc=None):
    """ Generate the distilled set: ipc samples per class, drawn with the
    deterministic sampler from the sampling stream. Any ipc works with
    the same network.

    Returns:
        LabeledLatents: ordered by class, ipc rows each.
    """
    sched = sched or build_schedule(config)
    ipc = config.ipc if ipc is None else int(ipc)
    if ipc < 1:
        raise ConfigError('ipc must be >= 1, got %r' % ipc)
    if not params.is_finite():
        raise DomainError('generate_distilled() got non-finite parameters')
    labels = np.repeat(np.arange(config.n_classes), ipc)
    rng = RngStream(config.seed_sampling, STREAM_SAMPLING)
    latents = sample_batch(params, labels, config.sampling_steps, rng, sched)
    return LabeledLatents(latents, labels)


def distill(params, config, dataset):
    """ Fine-tune a pretrained network with the memory losses and
    generate the distilled set.

    Parameters:
        params (DenoiserParams): the pretrained network.
        config (DistillConfig): the run config.
        dataset (LabeledLatents): the real training latents.

    Returns:
        RunArtifacts: with exactly ipc * n_classes distilled latents.
    """
    train_log, snapshots = [], []
    params = fine_tune(params, config, dataset, train_log, snapshots)
    distilled = generate_distilled(params, config)
    assert len(distilled) == config.ipc * config.n_classes
    logger.info('Generated %i distilled latents (%i per class)',
                len(distilled), config.ipc)
    return RunArtifacts(params, distilled, train_log, snapshots)


def run_distillation(config, dataset):
    """ Pretrain and distill in one go; the pretraining history is kept
    in the artifacts.
    """
    history = []
    params = pretrain(config, dataset, history)
    artifacts = distill(params, config, dataset)
    artifacts.pretrain_history = history
    return artifacts
