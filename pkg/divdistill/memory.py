"""
Bounded memory sets of latents with similarity-based eviction.

A memory holds at most ``capacity`` latents. When an enqueue pushes it
over capacity, elements are evicted one at a time until it fits again.
Which element goes is decided by the policy:

* ``max``: the element with the largest sum of cosine similarities to
  all elements (itself included). Removing the most "crowded" latent
  keeps the memory spread out over the distribution.
* ``min``: the element with the smallest similarity sum.
* ``oldest``: the earliest inserted element (plain FIFO).

Ties go to the element with the smallest insertion index. Sums are
recomputed from scratch after every removal. Values within
``TIE_TOLERANCE`` (times the number of summed terms) of the extreme
count as tied, so rounding in the last bits never overrides the
insertion order.
"""

import enum

import numpy as np

from .base import ConfigError, DomainError, EmptyMemoryError
from .numerics import as_latent, cosine_matrix

TIE_TOLERANCE = 1e-12


def first_extreme(values, mode, tolerance=TIE_TOLERANCE):
    """ The first position whose value is within tolerance of the
    minimum ('min') or maximum ('max') of values.
    """
    values = np.asarray(values, dtype=np.float64)
    if mode == 'max':
        return int(np.flatnonzero(values >= values.max() - tolerance)[0])
    return int(np.flatnonzero(values <= values.min() + tolerance)[0])


def similarity_matrix(latents):
    """ The symmetric cosine similarity matrix of the rows of latents,
    with an exact unit diagonal.
    """
    sim = cosine_matrix(latents)
    sim = 0.5 * (sim + sim.T)
    np.fill_diagonal(sim, 1.0)
    return sim


class EvictionPolicy(enum.Enum):
    """ Which element a full memory evicts.
    """
    OLDEST = 'oldest'
    MAX_SIMILARITY_SUM = 'max'
    MIN_SIMILARITY_SUM = 'min'

    @classmethod
    def parse(cls, value):
        """ Get a policy from a policy, its value ('oldest', 'max', 'min')
        or its name (case insensitive).
        """
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for policy in cls:
            if key in (policy.value, policy.name.lower()):
                return policy
        raise ConfigError('unknown eviction policy %r, use oldest, max or min'
                          % (value, ))


class MemorySet:
    """ A bounded, ordered buffer of nonzero latents.

    Items are kept in insertion order, so position 0 always holds the
    oldest element and ties resolved by "first position" are resolved by
    smallest insertion index.

    Parameters:
        capacity (int): the maximum size (N_R or N_G).
        policy (EvictionPolicy or str): the eviction policy.
        dim (int, optional): the latent dimension; set by the first
            enqueue if not given.
    """

    def __init__(self, capacity, policy=EvictionPolicy.MAX_SIMILARITY_SUM,
                 dim=None):
        if int(capacity) != capacity or capacity < 1:
            raise ConfigError('MemorySet capacity must be an integer >= 1, got %r'
                              % (capacity, ))
        self.capacity = int(capacity)
        self.policy = EvictionPolicy.parse(policy)
        self.dim = dim
        self.insertion_counter = 0
        self._latents = []
        self._insertion = []

    def __len__(self):
        return len(self._latents)

    def __repr__(self):
        return '<MemorySet %i/%i policy=%s>' % (len(self), self.capacity,
                                               self.policy.value)

    @property
    def latents(self):
        """ The stored latents as an (n, d) array (a copy).
        """
        if not self._latents:
            return np.zeros((0, self.dim or 0))
        return np.array(self._latents)

    @property
    def insertion_indices(self):
        return list(self._insertion)

    def latent_at(self, index):
        return self._latents[index]

    def copy(self):
        m = MemorySet(self.capacity, self.policy, self.dim)
        m.insertion_counter = self.insertion_counter
        m._latents = list(self._latents)
        m._insertion = list(self._insertion)
        return m

    def enqueue(self, z):
        """ Append a latent and evict until the memory fits its capacity.

        Returns:
            list: the insertion indices of the evicted elements.
        """
        z = as_latent(z, self.dim, 'enqueued latent')
        if not np.linalg.norm(z) > 0:
            raise DomainError('MemorySet.enqueue() got a zero-norm latent')
        if self.dim is None:
            self.dim = z.shape[0]
        self._latents.append(z.copy())
        self._insertion.append(self.insertion_counter)
        self.insertion_counter += 1
        return self.evict_until_capacity()

    def similarity_sums(self):
        """ For each element, the sum of its cosine similarities with all
        elements, itself included.
        """
        if not self._latents:
            raise EmptyMemoryError('similarity_sums() on an empty memory')
        return similarity_matrix(np.array(self._latents)).sum(axis=1)

    def evict_index(self):
        """ The position of the element the policy evicts next.
        """
        if not self._latents:
            raise EmptyMemoryError('evict_index() on an empty memory')
        if self.policy is EvictionPolicy.OLDEST:
            return 0
        sums = self.similarity_sums()
        tolerance = TIE_TOLERANCE * len(sums)
        if self.policy is EvictionPolicy.MAX_SIMILARITY_SUM:
            return first_extreme(sums, 'max', tolerance)
        return first_extreme(sums, 'min', tolerance)

    def evict_until_capacity(self):
        """ Remove elements until the size is at most the capacity.

        Returns:
            list: the insertion indices of the removed elements.
        """
        removed = []
        while len(self._latents) > self.capacity:
            i = self.evict_index()
            self._latents.pop(i)
            removed.append(self._insertion.pop(i))
        return removed

    def extreme_similarity(self, query, mode):
        """ Find the element with the smallest ('min') or largest ('max')
        cosine similarity to the query.

        Returns:
            tuple: (position, similarity).
        """
        if mode not in ('min', 'max'):
            raise ConfigError("extreme_similarity() mode must be 'min' or 'max'")
        query = np.asarray(query, dtype=np.float64)
        if not np.linalg.norm(query) > 0:
            raise DomainError('extreme_similarity() got a zero-norm query')
        if not self._latents:
            raise EmptyMemoryError('extreme_similarity() on an empty memory')
        sims = cosine_matrix(query[None], np.array(self._latents))[0]
        i = first_extreme(sims, mode)
        return i, float(sims[i])


class MemoryBank:
    """ The real and generated memories of a run: one pair per class, or
    a single pair shared by all classes.

    Parameters:
        n_classes (int): the number of classes.
        capacity_real (int): N_R.
        capacity_gen (int): N_G.
        policy_real (EvictionPolicy or str): policy of the real memories.
        policy_gen (EvictionPolicy or str): policy of the generated memories.
        per_class (bool): whether each class has its own pair.
    """

    def __init__(self, n_classes, capacity_real=64, capacity_gen=64,
                 policy_real='max', policy_gen='max', per_class=True):
        self.n_classes = int(n_classes)
        self.per_class = bool(per_class)
        keys = list(range(self.n_classes)) if self.per_class else [None]
        self._real = dict((k, MemorySet(capacity_real, policy_real)) for k in keys)
        self._gen = dict((k, MemorySet(capacity_gen, policy_gen)) for k in keys)

    def __repr__(self):
        return '<MemoryBank %s with %i pairs>' % (
            'per-class' if self.per_class else 'global', len(self._real))

    def _key(self, label):
        if not self.per_class:
            return None
        label = int(label)
        if label not in self._real:
            raise ConfigError('class label %i outside 0..%i' %
                              (label, self.n_classes - 1))
        return label

    def real(self, label):
        return self._real[self._key(label)]

    def gen(self, label):
        return self._gen[self._key(label)]

    def pairs(self):
        """ Iterate over (key, real memory, generated memory); key is the
        class label, or None for a global bank.
        """
        for key in self._real:
            yield key, self._real[key], self._gen[key]

    def max_size(self):
        return max(max(len(r), len(g)) for _, r, g in self.pairs())
