""" Tests for the bounded memories and their eviction policies.
"""

import collections

import numpy as np

from divdistill.testing import run_tests_if_main, raises

from divdistill import ConfigError, DomainError, EmptyMemoryError, StateError
from divdistill.memory import EvictionPolicy, MemorySet, MemoryBank


def make_memory(latents, capacity=None, policy='max'):
    m = MemorySet(capacity or max(1, len(latents)), policy)
    for z in latents:
        m.enqueue(z)
    return m


def brute_force_evict(items, capacity, policy):
    """ Reference eviction on a list of (insertion, latent), recomputing
    every pairwise similarity in plain Python at each removal. Self-terms
    are exactly 1 and sums within 1e-12 per term of the extreme are ties.
    """
    items = list(items)
    while len(items) > capacity:
        if policy == 'oldest':
            pos = 0
        else:
            sums = []
            for i, (_, a) in enumerate(items):
                s = 0.0
                for j, (_, b) in enumerate(items):
                    if i == j:
                        s += 1.0
                    else:
                        s += float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
                sums.append(s)
            tol = 1e-12 * len(sums)
            if policy == 'max':
                best = max(sums)
                pos = [k for k, s in enumerate(sums) if s >= best - tol][0]
            else:
                best = min(sums)
                pos = [k for k, s in enumerate(sums) if s <= best + tol][0]
        items.pop(pos)
    return [i for i, _ in items]


def test_policy_parse():
    assert EvictionPolicy.parse('max') is EvictionPolicy.MAX_SIMILARITY_SUM
    assert EvictionPolicy.parse('MIN') is EvictionPolicy.MIN_SIMILARITY_SUM
    assert EvictionPolicy.parse('oldest') is EvictionPolicy.OLDEST
    assert EvictionPolicy.parse('max_similarity_sum') is EvictionPolicy.MAX_SIMILARITY_SUM
    assert EvictionPolicy.parse(EvictionPolicy.OLDEST) is EvictionPolicy.OLDEST
    with raises(ConfigError):
        EvictionPolicy.parse('newest')


def test_memory_init():
    m = MemorySet(4)
    assert len(m) == 0 and m.capacity == 4
    assert m.policy is EvictionPolicy.MAX_SIMILARITY_SUM
    assert m.latents.shape[0] == 0
    assert 'MemorySet' in repr(m)
    with raises(ConfigError):
        MemorySet(0)
    with raises(ConfigError):
        MemorySet(2.5)


def test_enqueue():
    m = MemorySet(4)
    assert m.enqueue([1, 0]) == []
    assert len(m) == 1 and m.dim == 2
    for z in ([0, 1], [1, 1], [-1, 0]):
        m.enqueue(z)
    assert len(m) == 4
    removed = m.enqueue([0, -1])
    assert len(removed) == 1 and len(m) == 4
    assert m.insertion_counter == 5
    with raises(DomainError):
        m.enqueue([0, 0])
    with raises(ConfigError):
        m.enqueue([1, 2, 3])
    assert len(m) == 4


def test_enqueue_copies():
    z = np.array([1.0, 2.0])
    m = make_memory([z], capacity=2)
    z[0] = 100
    assert m.latent_at(0)[0] == 1.0
    m2 = m.copy()
    m2.enqueue([3, 3])
    assert len(m) == 1 and len(m2) == 2


def test_similarity_sums():
    assert np.allclose(make_memory([[2, 3]]).similarity_sums(), [1.0])
    m = make_memory([[1, 0], [0.8, 0.6], [0, 1]])
    assert np.allclose(m.similarity_sums(), [1.8, 2.4, 1.6], atol=1e-12)
    m = make_memory([[1, 2, 3]] * 5)
    assert np.allclose(m.similarity_sums(), 5)
    with raises(EmptyMemoryError):
        MemorySet(2).similarity_sums()


def test_similarity_sums_bounds():
    rng = np.random.default_rng(2)
    for i in range(50):
        n = rng.integers(2, 12)
        m = make_memory(rng.normal(size=(n, 3)))
        sums = m.similarity_sums()
        assert np.all(sums >= -(n - 2) - 1e-9) and np.all(sums <= n + 1e-9)
        m = make_memory(np.abs(rng.normal(size=(n, 3))) + 0.01)
        assert np.all(m.similarity_sums() >= 1)


def test_evict_index():
    m = make_memory([[1, 0], [0.8, 0.6], [0, 1]], policy='max')
    assert m.evict_index() == 1
    m = make_memory([[1, 0], [0.8, 0.6], [0, 1]], policy='min')
    assert m.evict_index() == 2
    m = make_memory([[1, 1]] * 4, policy='max')
    assert m.evict_index() == 0
    m = make_memory([[1, 1]] * 4, policy='min')
    assert m.evict_index() == 0
    m = make_memory([[0.8, 0.6], [1, 0], [0, 1]], policy='oldest')
    assert m.evict_index() == 0
    with raises(StateError):
        MemorySet(3).evict_index()


def test_evict_until_capacity_bounds():
    m = make_memory([[1, 0], [0, 1], [1, 1]], capacity=3)
    assert m.evict_until_capacity() == []
    m = MemorySet(3, 'max')
    for z in ([1, 0], [0, 1], [1, 1]):
        m.enqueue(z)
    assert len(m.enqueue([1, 0.9])) == 1
    assert len(m) == 3


def test_eviction_matches_brute_force():
    rng = np.random.default_rng(3)
    for policy in ('max', 'min', 'oldest'):
        for i in range(1000):
            n = int(rng.integers(2, 13))
            d = int(rng.integers(1, 5))
            capacity = int(rng.integers(1, n + 1))
            latents = rng.normal(size=(n, d))
            m = MemorySet(n, policy)
            for z in latents:
                m.enqueue(z)
            m.capacity = capacity
            m.evict_until_capacity()
            expected = brute_force_evict(list(enumerate(latents)), capacity, policy)
            assert m.insertion_indices == expected
            assert np.array_equal(m.latents, latents[expected])


def test_eviction_twelve_over_eight():
    rng = np.random.default_rng(4)
    latents = rng.normal(size=(12, 3))
    m = MemorySet(12, 'max')
    for z in latents:
        m.enqueue(z)
    m.capacity = 8
    removed = m.evict_until_capacity()
    assert len(removed) == 4 and len(m) == 8
    assert m.insertion_indices == brute_force_evict(list(enumerate(latents)), 8, 'max')


def test_max_policy_keeps_most_dissimilar_remainder():
    # Removing the element with the largest sum leaves the remainder
    # with the smallest total similarity among all single removals.
    rng = np.random.default_rng(5)
    for i in range(200):
        n = int(rng.integers(3, 12))
        m = make_memory(rng.normal(size=(n, 3)), policy='max')
        lat = m.latents
        u = lat / np.linalg.norm(lat, axis=1)[:, None]
        sim = u @ u.T

        def remainder_total(k):
            keep = [j for j in range(n) if j != k]
            return sim[np.ix_(keep, keep)].sum()

        chosen = remainder_total(m.evict_index())
        assert all(chosen <= remainder_total(k) + 1e-9 for k in range(n))


def test_evict_index_permutation_covariant():
    # Only memories with a clear winner; ties go by insertion order.
    rng = np.random.default_rng(6)
    checked = 0
    for i in range(200):
        latents = rng.normal(size=(int(rng.integers(3, 10)), 3))
        a = make_memory(latents, policy='max')
        sums = np.sort(a.similarity_sums())
        if sums[-1] - sums[-2] < 1e-6:
            continue
        perm = rng.permutation(latents.shape[0])
        b = make_memory(latents[perm], policy='max')
        assert np.array_equal(a.latent_at(a.evict_index()),
                              b.latent_at(b.evict_index()))
        checked += 1
    assert checked > 100


def test_two_element_ties_evict_oldest():
    # With two elements both sums are 1 + s, so the oldest must go.
    rng = np.random.default_rng(10)
    for policy in ('max', 'min'):
        for i in range(2000):
            d = int(rng.integers(1, 6))
            m = MemorySet(1, policy)
            m.enqueue(rng.normal(size=d))
            assert m.enqueue(rng.normal(size=d)) == [0]
            assert m.insertion_indices == [1]


def test_parallel_latents_evict_earliest():
    # Scaled copies of one direction tie on every sum.
    rng = np.random.default_rng(11)
    for i in range(200):
        v = rng.normal(size=int(rng.integers(1, 6)))
        scales = rng.uniform(0.1, 1e3, size=int(rng.integers(2, 8)))
        for policy in ('max', 'min'):
            m = make_memory([s * v for s in scales], policy=policy)
            assert m.evict_index() == 0


def test_oldest_policy_is_fifo():
    rng = np.random.default_rng(7)
    for capacity in (1, 3, 8):
        m = MemorySet(capacity, 'oldest')
        queue = collections.deque(maxlen=capacity)
        for i in range(40):
            z = rng.normal(size=2)
            m.enqueue(z)
            queue.append(z)
            assert np.array_equal(m.latents, np.array(queue))


def test_capacity_never_exceeded():
    rng = np.random.default_rng(8)
    for policy in ('max', 'min', 'oldest'):
        m = MemorySet(5, policy)
        for i in range(100):
            m.enqueue(rng.normal(size=3))
            assert len(m) <= 5
            assert len(m.insertion_indices) == len(m)
            assert m.insertion_indices == sorted(m.insertion_indices)


def test_extreme_similarity():
    m = make_memory([[1, 0], [0, 1]])
    assert m.extreme_similarity([1, 0], 'max') == (0, 1.0)
    assert m.extreme_similarity([1, 0], 'min') == (1, 0.0)
    # ties go to the earliest element
    m = make_memory([[1, 1], [1, 1], [-1, 0]])
    assert m.extreme_similarity([1, 1], 'max')[0] == 0
    rng = np.random.default_rng(12)
    for i in range(200):
        v = rng.normal(size=3)
        m = make_memory([0.3 * v, 7.0 * v, -v, -11.0 * v])
        q = rng.normal(size=3)
        assert m.extreme_similarity(q, 'max')[0] in (0, 2)
        assert m.extreme_similarity(q, 'min')[0] in (0, 2)
        assert m.extreme_similarity(v, 'max')[0] == 0
        assert m.extreme_similarity(v, 'min')[0] == 2
    with raises(EmptyMemoryError):
        MemorySet(2).extreme_similarity([1, 0], 'max')
    with raises(DomainError):
        m.extreme_similarity([0, 0], 'max')
    with raises(ConfigError):
        m.extreme_similarity([1, 0], 'median')


def test_extreme_similarity_brute_force():
    rng = np.random.default_rng(9)
    for i in range(200):
        n = int(rng.integers(1, 13))
        m = make_memory(rng.normal(size=(n, 3)))
        q = rng.normal(size=3)
        sims = [float(np.dot(q, z) / np.linalg.norm(q) / np.linalg.norm(z))
                for z in m.latents]
        i_max, v_max = m.extreme_similarity(q, 'max')
        i_min, v_min = m.extreme_similarity(q, 'min')
        assert abs(v_max - max(sims)) < 1e-12 and abs(v_min - min(sims)) < 1e-12
        assert abs(sims[i_max] - max(sims)) < 1e-12
        assert abs(sims[i_min] - min(sims)) < 1e-12


def test_memory_bank():
    bank = MemoryBank(3, 4, 5, 'max', 'oldest')
    assert bank.real(0) is not bank.real(1)
    assert bank.real(2).capacity == 4 and bank.gen(2).capacity == 5
    assert bank.gen(1).policy is EvictionPolicy.OLDEST
    assert [k for k, _, _ in bank.pairs()] == [0, 1, 2]
    bank.real(1).enqueue([1, 0])
    assert bank.max_size() == 1
    with raises(ConfigError):
        bank.real(3)

    bank = MemoryBank(3, per_class=False)
    assert bank.real(0) is bank.real(2)
    assert [k for k, _, _ in bank.pairs()] == [None]
    assert 'global' in repr(bank)


run_tests_if_main()
