"""
Base definitions shared by all divdistill modules: the exception
hierarchy and the container for labeled latents.
"""

import numpy as np

__all__ = ['DistillError', 'ConfigError', 'DomainError', 'StepRangeError',
           'TrainingError', 'SamplingError', 'StateError', 'EmptyMemoryError',
           'ArtifactError', 'LabeledLatents']


class DistillError(Exception):
    """ Base class for all errors raised by divdistill. The ``category``
    class attribute is what the command line reports on failure.
    """
    category = 'error'


class ConfigError(DistillError, ValueError):
    """ Raised for invalid configuration values, unknown keys and
    inconsistent shapes.
    """
    category = 'config'


class DomainError(DistillError, ValueError):
    """ Raised when an input lies outside the domain of an operation,
    e.g. a zero-norm vector passed to the cosine similarity.
    """
    category = 'domain'


class StepRangeError(DistillError, IndexError):
    """ Raised for a diffusion timestep outside 1..T.
    """
    category = 'index'


class TrainingError(DistillError, RuntimeError):
    """ Raised when training produces a non-finite loss or gradient.

    Parameters:
        msg (str): the message.
        epoch (int, optional): the epoch in which it happened.
        step (int, optional): the (global) step in which it happened.
    """
    category = 'training'

    def __init__(self, msg, epoch=None, step=None):
        where = []
        if epoch is not None:
            where.append('epoch %i' % epoch)
        if step is not None:
            where.append('step %i' % step)
        if where:
            msg = '%s (at %s)' % (msg, ', '.join(where))
        DistillError.__init__(self, msg)
        self.epoch = epoch
        self.step = step


class SamplingError(DistillError, RuntimeError):
    """ Raised when the sampler produces a non-finite state.
    """
    category = 'sampling'

    def __init__(self, msg, step=None):
        if step is not None:
            msg = '%s (at sampling step %i)' % (msg, step)
        DistillError.__init__(self, msg)
        self.step = step


class StateError(DistillError, RuntimeError):
    """ Raised when an operation is invalid for the current state of
    an object.
    """
    category = 'state'


class EmptyMemoryError(StateError):
    """ Raised by memory queries on an empty memory set. Callers of the
    diversity losses catch this to zero out the corresponding term.
    """
    pass


class ArtifactError(DistillError, IOError):
    """ Raised for unreadable or corrupt artifacts, and when a command
    would overwrite an existing run.
    """
    category = 'artifact'


class LabeledLatents:
    """ A set of latents with integer class labels.

    Parameters:
        latents (array): shape (n, d), converted to float64.
        labels (array): shape (n,), integer class ids.
        components (array, optional): shape (n,), the mixture component
            each latent was drawn from (-1 when unknown).
    """

    __slots__ = ['latents', 'labels', 'components']

    def __init__(self, latents, labels, components=None):
        latents = np.asarray(latents, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if latents.ndim != 2:
            raise ConfigError('LabeledLatents needs a 2D latents array, got '
                              'shape %r' % (latents.shape, ))
        if labels.shape != (latents.shape[0], ):
            raise ConfigError('LabeledLatents got %i latents but labels of '
                              'shape %r' % (latents.shape[0], labels.shape))
        if components is None:
            components = np.full(labels.shape, -1, dtype=np.int64)
        components = np.asarray(components, dtype=np.int64)
        self.latents = latents
        self.labels = labels
        self.components = components

    def __len__(self):
        return self.latents.shape[0]

    def __repr__(self):
        return '<%s with %i latents of dim %i>' % (
            self.__class__.__name__, len(self), self.dim)

    @property
    def dim(self):
        return self.latents.shape[1]

    def classes(self):
        """ Get the sorted list of class ids present.
        """
        return sorted(set(int(i) for i in self.labels))

    def of_class(self, label):
        """ Get the latents with the given label, shape (m, d).
        """
        return self.latents[self.labels == label]

    def take(self, indices):
        """ Get a new LabeledLatents with the rows at the given indices.
        """
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledLatents(self.latents[indices], self.labels[indices],
                              self.components[indices])

    def counts(self, n_classes):
        """ Get the number of latents per class as an int array.
        """
        return np.bincount(self.labels, minlength=n_classes)
