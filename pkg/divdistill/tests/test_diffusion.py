""" Tests for the toy diffusion model: schedule, noising, the noise
predictor, the sampler and the gradient of the training loss.
"""

import numpy as np

from divdistill.testing import run_tests_if_main, raises
from divdistill.testing import central_difference, max_relative_error

from divdistill import ConfigError, StepRangeError, TrainingError
from divdistill.numerics import RngStream
from divdistill.diffusion import (VarianceSchedule, make_schedule, time_features,
                                  ConditioningVector, DenoiserParams, init_denoiser,
                                  denoiser_forward, denoiser_forward_batch,
                                  forward_noise, predict_z0, diffusion_loss,
                                  sampling_timesteps, sample, sample_batch,
                                  TrainingBatch, draw_batch, loss_and_gradient,
                                  loss_gradient, batch_loss_value)
from divdistill.memory import MemoryBank
from divdistill.objectives import LossWeights


def small_net(seed=0, latent_dim=2, n_classes=3, n_steps=100, hidden=(6, 6)):
    return init_denoiser(latent_dim, n_classes, n_steps, RngStream(seed, 1), hidden)


def zero_net(params):
    return params.with_arrays([np.zeros_like(a) for a in params.arrays])


def test_make_schedule():
    sched = make_schedule(2, 0.1, 0.1)
    assert np.allclose(sched.alpha_bar, [0.9, 0.81], rtol=0, atol=1e-15)
    sched = make_schedule()
    assert sched.n_steps == 1000
    assert np.all(np.diff(sched.alpha_bar) < 0)
    assert sched.alpha_bar[-1] < 0.01
    assert 'T=1000' in repr(sched)
    with raises(ConfigError):
        make_schedule(1)
    with raises(ConfigError):
        make_schedule(10, 0.5, 0.1)
    with raises(ConfigError):
        make_schedule(10, 0.0, 0.1)
    with raises(ConfigError):
        make_schedule(10, 0.1, 1.0)


def test_schedule_monotonic_for_random_bounds():
    rng = np.random.default_rng(0)
    for i in range(50):
        b0 = rng.uniform(1e-5, 0.1)
        b1 = rng.uniform(b0, 0.5)
        sched = make_schedule(int(rng.integers(2, 500)), b0, b1)
        assert np.all(np.diff(sched.alpha_bar) < 0)
        assert np.all((sched.alpha_bar > 0) & (sched.alpha_bar < 1))


def test_variance_schedule_validation():
    with raises(ConfigError):
        VarianceSchedule([0.5, 0.6])
    with raises(ConfigError):
        VarianceSchedule([1.0, 0.5])
    with raises(ConfigError):
        VarianceSchedule([])
    sched = VarianceSchedule([0.9, 0.5])
    assert sched.at(1) == 0.9 and sched.at(2) == 0.5
    with raises(StepRangeError):
        sched.at(0)
    with raises(StepRangeError):
        sched.at(3)
    with raises(IndexError):  # StepRangeError is an IndexError
        sched.check_step([1, 2, 5])


def test_time_features():
    f = time_features(10, 100)
    assert f.shape == (8, )
    assert np.allclose(f[:4] ** 2 + f[4:] ** 2, 1)
    assert time_features(np.array([1, 2, 3]), 100, 4).shape == (3, 4)
    with raises(ConfigError):
        time_features(1, 100, 3)


def test_conditioning_vector():
    c = ConditioningVector(2, 4)
    assert c.embedding.tolist() == [0, 0, 1, 0]
    assert c.time_embedding(5, 10).shape == (8, )
    with raises(ConfigError):
        ConditioningVector(4, 4)
    with raises(ConfigError):
        ConditioningVector(-1, 4)


def test_forward_noise_examples():
    sched = VarianceSchedule([0.25])
    z = forward_noise([2, 0], 1, [0, 2], sched)
    assert np.allclose(z, [1.0, 1.7320508], atol=1e-7)
    assert np.allclose(predict_z0([1.0, 1.7320508075688772], 1, [0, 2], sched), [2, 0])
    # limits
    z0, eps = np.array([3.0, -1.0]), np.array([0.5, 0.25])
    assert np.allclose(forward_noise(z0, 1, eps, VarianceSchedule([1 - 1e-12])), z0)
    assert np.allclose(forward_noise(z0, 1, eps, VarianceSchedule([1e-12])), eps)
    with raises(StepRangeError):
        forward_noise(z0, 2, eps, sched)


def test_predict_z0_zero_noise():
    sched = make_schedule(50)
    z_t = np.array([0.3, -0.7])
    assert np.allclose(predict_z0(z_t, 20, [0, 0], sched), z_t / np.sqrt(sched.at(20)))


def test_round_trip():
    sched = make_schedule()
    rng = np.random.default_rng(1)
    for t in [1, 2, 10, 100, 500, 999, 1000]:
        z0, eps = rng.normal(size=3), rng.normal(size=3)
        z = predict_z0(forward_noise(z0, t, eps, sched), t, eps, sched)
        tol = 1e-12 * max(1.0, 1.0 / np.sqrt(sched.at(t)))
        assert np.allclose(z, z0, rtol=tol, atol=tol)
    # batched
    ts = np.array([1, 500, 1000])
    z0, eps = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
    z = predict_z0(forward_noise(z0, ts, eps, sched), ts, eps, sched)
    assert np.allclose(z, z0, atol=1e-9)


def test_denoiser_params():
    params = small_net()
    assert params.input_dim == 2 + 8 + 3
    assert params.hidden == (6, 6)
    assert len(params.arrays) == 6
    assert params.is_finite()
    with raises(ConfigError):
        DenoiserParams(params.weights[:2], params.biases, 2, 3, 100)
    with raises(ConfigError):
        DenoiserParams(params.weights, params.biases, 3, 3, 100)
    broken = params.with_arrays([a * np.nan for a in params.arrays])
    assert not broken.is_finite()


def test_denoiser_forward():
    params = small_net()
    c = ConditioningVector(1, 3)
    z = np.array([0.5, -0.5])
    out1 = denoiser_forward(params, z, 10, c)
    out2 = denoiser_forward(params, z, 10, c)
    assert out1.shape == (2, ) and np.array_equal(out1, out2)
    # batched agrees with single
    batch = denoiser_forward_batch(params, [z, z], [10, 10], [1, 1])
    assert np.allclose(batch[0], out1, rtol=0, atol=1e-15)
    # zero weights give zero output
    assert np.all(denoiser_forward(zero_net(params), z, 10, c) == 0)
    with raises(ConfigError):
        denoiser_forward(params, [1, 2, 3], 10, c)
    with raises(ConfigError):
        denoiser_forward(params, z, 10, ConditioningVector(1, 4))
    with raises(StepRangeError):
        denoiser_forward(params, z, 101, c)


def test_denoiser_depends_on_class():
    for seed in range(100):
        params = small_net(seed)
        rng = np.random.default_rng(seed)
        z = rng.normal(size=2)
        t = int(rng.integers(1, 101))
        a = denoiser_forward(params, z, t, ConditioningVector(0, 3))
        b = denoiser_forward(params, z, t, ConditioningVector(2, 3))
        assert not np.array_equal(a, b)


def test_diffusion_loss():
    assert diffusion_loss([0.3, 0.4], [0.3, 0.4]) == 0
    assert diffusion_loss([1, 0], [0, 1]) == 2.0
    rng = np.random.default_rng(2)
    for i in range(20):
        a, b = rng.normal(size=5), rng.normal(size=5)
        expected = sum((x - y) ** 2 for x, y in zip(a, b))
        assert abs(diffusion_loss(a, b) - expected) < 1e-12
    with raises(ConfigError):
        diffusion_loss([1, 0], [1, 0, 0])


def test_sampling_timesteps():
    ts = sampling_timesteps(1000, 50)
    assert len(ts) == 50 and ts[0] == 1000 and ts[-1] == 1
    assert np.all(np.diff(ts) < 0)
    assert sampling_timesteps(1000, 1).tolist() == [1000]
    assert sampling_timesteps(5, 5).tolist() == [5, 4, 3, 2, 1]
    with raises(ConfigError):
        sampling_timesteps(10, 11)
    with raises(ConfigError):
        sampling_timesteps(10, 0)


def test_sample_single_step():
    params = small_net()
    sched = make_schedule(100)
    c = ConditioningVector(2, 3)
    out = sample(params, c, 1, RngStream(4, 3), sched)
    noise = RngStream(4, 3).normal((1, 2))[0]
    eps_hat = denoiser_forward(params, noise, 100, c)
    assert np.allclose(out, predict_z0(noise, 100, eps_hat, sched), rtol=1e-12)


def test_sample_determinism():
    params = small_net()
    sched = make_schedule(100)
    c = ConditioningVector(0, 3)
    a = sample(params, c, 20, RngStream(1, 3), sched)
    b = sample(params, c, 20, RngStream(1, 3), sched)
    assert a.tobytes() == b.tobytes()
    assert np.all(np.isfinite(a))
    x = sample_batch(params, [0, 1, 2, 2], 10, RngStream(1, 3), sched)
    assert x.shape == (4, 2)
    assert sample_batch(params, [], 10, RngStream(1, 3), sched).shape == (0, 2)


def test_draw_batch():
    sched = make_schedule(100)
    z0 = np.ones((6, 2))
    b1 = draw_batch(z0, np.zeros(6, int), sched, RngStream(0, 2))
    b2 = draw_batch(z0, np.zeros(6, int), sched, RngStream(0, 2))
    assert len(b1) == 6
    assert np.array_equal(b1.ts, b2.ts) and np.array_equal(b1.eps, b2.eps)
    assert b1.ts.min() >= 1 and b1.ts.max() <= 100
    with raises(ConfigError):
        TrainingBatch(np.zeros((0, 2)), [], [], np.zeros((0, 2)))
    with raises(ConfigError):
        TrainingBatch(z0, np.zeros(5), b1.ts, b1.eps)


## Gradient of the training loss

def random_problem(seed, with_memory=True):
    rng = np.random.default_rng(seed)
    n_classes = 3
    params = small_net(seed, hidden=(5, 4))
    sched = make_schedule(100)
    n = int(rng.integers(1, 5))
    z0 = rng.normal(size=(n, 2)) * 2
    labels = rng.integers(0, n_classes, size=n)
    ts = rng.integers(1, 40, size=n)  # keep sqrt(1-a)/sqrt(a) moderate
    batch = TrainingBatch(z0, labels, ts, rng.normal(size=(n, 2)))
    bank = None
    if with_memory:
        bank = MemoryBank(n_classes, 6, 6, 'max', 'max')
        for c in range(n_classes):
            for z in rng.normal(size=(int(rng.integers(1, 7)), 2)):
                bank.real(c).enqueue(z)
            for z in rng.normal(size=(int(rng.integers(1, 7)), 2)):
                bank.gen(c).enqueue(z)
    return params, batch, bank, sched


def test_gradient_matches_finite_differences():
    weights = LossWeights(0.5, 0.8)
    for seed in range(20):
        params, batch, bank, sched = random_problem(seed)
        loss, grads = loss_and_gradient(params, batch, bank, weights, sched)
        assert np.all(loss.real_index >= 0) and np.all(loss.gen_index >= 0)

        def f(arrays):
            return batch_loss_value(params.with_arrays(arrays), batch, bank,
                                    weights, sched)

        numeric = central_difference(f, [a.copy() for a in params.arrays], 1e-5)
        assert max_relative_error(grads, numeric, 1e-4) < 1e-4


def test_gradient_without_memory_terms():
    params, batch, bank, sched = random_problem(3)
    _, pure = loss_and_gradient(params, batch, None, LossWeights(0, 0), sched)
    _, zero_weights = loss_and_gradient(params, batch, bank, LossWeights(0, 0), sched)
    empty = MemoryBank(3)
    _, empty_memory = loss_and_gradient(params, batch, empty, LossWeights(), sched)
    for a, b, c in zip(pure, zero_weights, empty_memory):
        assert np.array_equal(a, b) and np.array_equal(a, c)
    # with the memory terms active the gradient differs
    with_memory = loss_gradient(params, batch, bank, LossWeights(0.5, 0.5), sched)
    assert any(not np.array_equal(a, b) for a, b in zip(pure, with_memory))


def test_loss_terms():
    params, batch, bank, sched = random_problem(5)
    loss, _ = loss_and_gradient(params, batch, bank, LossWeights(), sched)
    assert np.all(loss.real_term >= -1) and np.all(loss.real_term <= 1)
    assert np.all(loss.gen_term >= -1) and np.all(loss.gen_term <= 1)
    # the memory terms are recorded even when their weights are zero
    loss0, _ = loss_and_gradient(params, batch, bank, LossWeights(0, 0), sched)
    assert np.array_equal(loss.real_term, loss0.real_term)
    total = loss.mean_breakdown(LossWeights()).total
    assert abs(batch_loss_value(params, batch, bank, LossWeights(), sched) - total) < 1e-15


def test_non_finite_training():
    params, batch, bank, sched = random_problem(6)
    broken = params.with_arrays([a * 1e308 * 10 for a in params.arrays])
    with raises(TrainingError):
        loss_and_gradient(broken, batch, None, LossWeights(0, 0), sched, epoch=1, step=3)


run_tests_if_main()
