"""
Run configuration.

Every hyperparameter of a run lives in a DistillConfig. The KEYS table
below is the single source for the keys, their types and defaults, the
config-file parser, the resolved-config writer and the command-line help.

Config files are flat ``key = value`` text::

    # a comment
    epochs = 8
    lambda_gen = 0.016
    gmm_weights = 0.6, 0.35, 0.05

Precedence is defaults < file < command-line overrides.
"""

import numpy as np

from .base import ConfigError
from .memory import EvictionPolicy
from .objectives import LossWeights


# (key, type, default, provenance, description)
# provenance: 'method' for values of the method description, 'artifact' for
# choices of this desk-scale implementation.
KEYS = [
    # Distillation
    ('epochs', 'int', 8, 'method',
     'fine-tuning epochs of the distillation loop'),
    ('batch_size', 'int', 8, 'method',
     'mini-batch size of the distillation loop'),
    ('learning_rate', 'float', 1e-3, 'method',
     'optimizer learning rate for fine-tuning'),
    ('weight_decay', 'float', 0.0, 'artifact',
     'decoupled weight decay'),
    ('lambda_real', 'float', 0.002, 'method',
     'weight of the representativeness term'),
    ('lambda_gen', 'float', 0.008, 'method',
     'weight of the diversity term'),
    ('capacity_real', 'int', 64, 'method',
     'size of the real memory'),
    ('capacity_gen', 'int', 64, 'method',
     'size of the generated memory'),
    ('policy_real', 'policy', 'max', 'method',
     'eviction policy of the real memory (oldest, max, min)'),
    ('policy_gen', 'policy', 'max', 'method',
     'eviction policy of the generated memory (oldest, max, min)'),
    ('per_class_memory', 'bool', True, 'artifact',
     'one memory pair per class instead of a global pair'),
    ('sampling_steps', 'int', 50, 'method',
     'denoising steps when generating the distilled set'),
    ('ipc', 'int', 10, 'method',
     'distilled samples per class'),
    # Seeds
    ('seed_data', 'int', 0, 'artifact',
     'seed of the data shuffling stream'),
    ('seed_init', 'int', 1, 'artifact',
     'seed of the parameter initialization stream'),
    ('seed_noise', 'int', 2, 'artifact',
     'seed of the training noise and timestep stream'),
    ('seed_sampling', 'int', 3, 'artifact',
     'seed of the sampling stream'),
    # Pretraining and the network
    ('pretrain_epochs', 'int', 200, 'artifact',
     'epochs of pure diffusion pretraining'),
    ('pretrain_batch_size', 'int', 64, 'artifact',
     'mini-batch size of pretraining'),
    ('pretrain_learning_rate', 'float', 1e-3, 'artifact',
     'learning rate of pretraining'),
    ('hidden_width', 'int', 64, 'artifact',
     'width of the hidden layers of the noise predictor'),
    ('hidden_layers', 'int', 2, 'artifact',
     'number of hidden layers of the noise predictor'),
    ('time_features', 'int', 8, 'artifact',
     'number of sinusoidal time features (even)'),
    ('diffusion_steps', 'int', 1000, 'artifact',
     'training timesteps T of the schedule'),
    ('beta_start', 'float', 1e-4, 'artifact',
     'beta at t=1 of the linear schedule'),
    ('beta_end', 'float', 0.02, 'artifact',
     'beta at t=T of the linear schedule'),
    # Benchmark
    ('n_classes', 'int', 4, 'artifact',
     'number of classes of the benchmark'),
    ('samples_per_class', 'int', 1000, 'artifact',
     'samples drawn per class'),
    ('latent_dim', 'int', 2, 'artifact',
     'latent dimension'),
    ('gmm_radius', 'float', 0.5, 'artifact',
     'distance of the component means from the origin'),
    ('gmm_spread', 'float', 0.5, 'artifact',
     'angle (radians) between neighbouring components of a class'),
    ('gmm_rare_offset', 'float', 1.5, 'artifact',
     'angle of the rare component below the class direction, in spreads'),
    ('gmm_std', 'float', 0.1, 'artifact',
     'isotropic standard deviation of the components'),
    ('gmm_weights', 'floats', (0.6, 0.35, 0.05), 'artifact',
     'component weights per class (last is the rare mode)'),
    ('train_fraction', 'float', 0.8, 'artifact',
     'fraction of each class used for training'),
    ('seed_benchmark', 'int', 7, 'artifact',
     'seed of the benchmark draws'),
    # Evaluation
    ('classifier_steps', 'int', 300, 'artifact',
     'full-batch steps of the downstream classifier'),
    ('classifier_learning_rate', 'float', 0.01, 'method',
     'learning rate of the downstream classifier'),
    ('classifier_hidden', 'int', 32, 'artifact',
     'hidden width of the downstream classifier (0: linear)'),
    ('eval_seeds', 'int', 5, 'artifact',
     'number of seeds of ablations, sweeps and comparisons'),
    ('ablation_ipcs', 'ints', (10, 20, 50), 'method',
     'IPC settings of ablations and comparisons'),
]

KEY_TYPES = dict((k[0], k[1]) for k in KEYS)
DEFAULTS = dict((k[0], k[2]) for k in KEYS)

_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')


def _convert(key, value):
    """ Convert a value (str or Python object) to the type of key.
    """
    if key not in KEY_TYPES:
        raise ConfigError('unknown config key %r' % (key, ))
    kind = KEY_TYPES[key]
    try:
        if kind == 'int':
            if isinstance(value, str):
                value = value.strip()
                f = float(value)
                if f != int(f):
                    raise ValueError(value)
                return int(f)
            if value != int(value):
                raise ValueError(value)
            return int(value)
        elif kind == 'float':
            return float(value)
        elif kind == 'bool':
            if isinstance(value, str):
                v = value.strip().lower()
                if v in _TRUE:
                    return True
                elif v in _FALSE:
                    return False
                raise ValueError(value)
            return bool(value)
        elif kind == 'policy':
            return EvictionPolicy.parse(value).value
        elif kind in ('floats', 'ints'):
            if isinstance(value, str):
                value = [v for v in value.replace(';', ',').split(',') if v.strip()]
            cast = float if kind == 'floats' else int
            return tuple(cast(float(v)) if cast is int else cast(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError('invalid value %r for config key %r (%s)' %
                          (value, key, kind))
    raise ConfigError('unknown type %r of key %r' % (kind, key))  # pragma: no cover


def _format(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    elif isinstance(value, float):
        return repr(value)
    elif isinstance(value, tuple):
        return ', '.join(_format(v) for v in value)
    return str(value)


class DistillConfig:
    """ All hyperparameters of a run. Construct with keyword arguments
    (see ``KEYS`` for the names); values not given take their defaults.
    Instances are treated as immutable: use replace() to derive variants.
    """

    def __init__(self, **kwargs):
        values = dict(DEFAULTS)
        for key, value in kwargs.items():
            values[key] = _convert(key, value)
        self.__dict__['_values'] = values
        self.validate()

    def __getattr__(self, name):
        try:
            return self.__dict__['_values'][name]
        except KeyError:
            raise AttributeError(name)

    def __setattr__(self, name, value):
        raise AttributeError('DistillConfig is immutable, use replace()')

    def __eq__(self, other):
        return isinstance(other, DistillConfig) and self._values == other._values

    def __repr__(self):
        changed = ['%s=%s' % (k, _format(v)) for k, v in self._values.items()
                   if v != DEFAULTS[k]]
        return '<DistillConfig %s>' % (', '.join(changed) or 'defaults')

    def __reduce__(self):
        return (_rebuild_config, (self.to_dict(), ))

    def to_dict(self):
        return dict(self._values)

    def replace(self, **kwargs):
        """ Get a copy with some values replaced.
        """
        values = self.to_dict()
        values.update(kwargs)
        return DistillConfig(**values)

    def validate(self):
        v = self._values
        for key in ('epochs', 'batch_size', 'capacity_real', 'capacity_gen',
                    'sampling_steps', 'ipc', 'pretrain_batch_size', 'hidden_width',
                    'hidden_layers', 'diffusion_steps', 'n_classes',
                    'samples_per_class', 'latent_dim', 'classifier_steps',
                    'eval_seeds'):
            if v[key] < 1:
                raise ConfigError('config key %r must be >= 1, got %r' % (key, v[key]))
        for key in ('pretrain_epochs', 'classifier_hidden', 'seed_data', 'seed_init',
                    'seed_noise', 'seed_sampling', 'seed_benchmark'):
            if v[key] < 0:
                raise ConfigError('config key %r must be >= 0, got %r' % (key, v[key]))
        for key in ('learning_rate', 'pretrain_learning_rate',
                    'classifier_learning_rate', 'gmm_radius'):
            if not (np.isfinite(v[key]) and v[key] > 0):
                raise ConfigError('config key %r must be > 0, got %r' % (key, v[key]))
        for key in ('weight_decay', 'lambda_real', 'lambda_gen', 'gmm_std',
                    'gmm_spread', 'gmm_rare_offset'):
            if not (np.isfinite(v[key]) and v[key] >= 0):
                raise ConfigError('config key %r must be >= 0, got %r' % (key, v[key]))
        if v['time_features'] < 2 or v['time_features'] % 2:
            raise ConfigError('config key time_features must be even and >= 2')
        if not 0 < v['beta_start'] <= v['beta_end'] < 1:
            raise ConfigError('config needs 0 < beta_start <= beta_end < 1')
        if v['sampling_steps'] > v['diffusion_steps']:
            raise ConfigError('sampling_steps cannot exceed diffusion_steps')
        if not 0 < v['train_fraction'] < 1:
            raise ConfigError('train_fraction must lie in (0, 1)')
        w = np.array(v['gmm_weights'])
        if w.size < 1 or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ConfigError('gmm_weights must be positive and sum to 1')
        if not v['ablation_ipcs'] or min(v['ablation_ipcs']) < 1:
            raise ConfigError('ablation_ipcs must be a nonempty list of counts >= 1')

    @property
    def weights(self):
        return LossWeights(self.lambda_real, self.lambda_gen)

    @property
    def hidden(self):
        return (self.hidden_width, ) * self.hidden_layers


def _rebuild_config(values):
    return DistillConfig(**values)


def parse_config_text(text, source='<string>'):
    """ Parse flat ``key = value`` text into a dict of typed values.
    """
    values = {}
    for linenr, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError('%s line %i: expected "key = value"' % (source, linenr))
        key, _, value = line.partition('=')
        key = key.strip()
        if key not in KEY_TYPES:
            raise ConfigError('%s line %i: unknown config key %r' %
                              (source, linenr, key))
        if key in values:
            raise ConfigError('%s line %i: duplicate key %r' % (source, linenr, key))
        try:
            values[key] = _convert(key, value.strip())
        except ConfigError as err:
            raise ConfigError('%s line %i: %s' % (source, linenr, err))
    return values


def load_config(filename=None, overrides=()):
    """ Load a config from a file (optional) and apply ``key=value``
    overrides on top.
    """
    values = {}
    if filename:
        try:
            with open(filename, 'rb') as f:
                text = f.read().decode()
        except (IOError, OSError) as err:
            raise ConfigError('cannot read config file %r: %s' % (filename, err))
        values.update(parse_config_text(text, filename))
    values.update(parse_overrides(overrides))
    return DistillConfig(**values)


def parse_overrides(overrides):
    """ Parse a list of ``key=value`` strings into a dict of typed values.
    """
    values = {}
    for item in overrides:
        if '=' not in item:
            raise ConfigError('override %r is not of the form key=value' % (item, ))
        key, _, value = item.partition('=')
        values[key.strip()] = _convert(key.strip(), value)
    return values


def dump_config(config):
    """ Get the text of a resolved config file, with every key present.
    """
    lines = ['# Resolved divdistill config; every key is listed.', '']
    for key, _, _, provenance, description in KEYS:
        lines.append('# %s [%s]' % (description, provenance))
        lines.append('%s = %s' % (key, _format(getattr(config, key))))
    return '\n'.join(lines) + '\n'


def describe_keys():
    """ Get lines documenting every key with its default, for --help.
    """
    width = max(len(k[0]) for k in KEYS)
    lines = []
    for key, kind, default, provenance, description in KEYS:
        note = ' (method default)' if provenance == 'method' else ''
        lines.append('  %s = %s%s\n      %s' %
                     (key.ljust(width), _format(default), note, description))
    return lines
