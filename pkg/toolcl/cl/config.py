"""Run configuration. A RunConfig serializes to a flat JSON object with
dotted keys for the model and optimizer sections, e.g.

    {"strategy": "er", "model.d_model": 64, "optim.peak_lr": 0.001}

Nested objects ({"model": {"d_model": 64}}) are accepted as well.
Precedence is defaults < config file < explicit overrides."""
import collections
import io
import json
import logging

from toolcl.exceptions import ConfigException, OptimizerException, ModelException
from toolcl.model.optimizer import OptimConfig
from toolcl.model.transformer import ModelConfig

__all__ = ['RunConfig',
           'flatten',
           'load_config_file',
           'MODES',
           'STRATEGIES']

LOGGER = logging.getLogger(__name__)
MODES = ('tools', 'raw')
STRATEGIES = ('sequential', 'mixed', 'er')

TOP_LEVEL_DEFAULTS = collections.OrderedDict([
    ('benchmark', None),
    ('mode', 'tools'),
    ('strategy', 'sequential'),
    ('epochs_per_task', 3),
    ('batch_size', 64),
    ('eval_subset_size', 500),
    ('eval_batch_size', 128),
    ('eval_workers', 1),
    ('max_new_tokens', 32),
    ('seed', 0),
    ('task_order_seed', None),
    ('tool_timeout', 5.0)])

MODEL_DEFAULTS = collections.OrderedDict([
    ('d_model', 128),
    ('n_layers', 4),
    ('n_heads', 4),
    ('d_ff', 512),
    ('context_len', None),
    ('init_std', 0.02),
    ('dtype', 'float32')])


def flatten(values, prefix=''):
    flat = collections.OrderedDict()
    for key, value in values.items():
        key = prefix + key
        if isinstance(value, dict):
            flat.update(flatten(value, key + '.'))
        else:
            flat[key] = value
    return flat


def load_config_file(path):
    try:
        with io.open(path, 'r', encoding='utf-8') as f:
            values = json.load(f)
    except (OSError, ValueError) as e:
        raise ConfigException('Cannot read config file {}: {}'.format(path, e))
    if not isinstance(values, dict):
        raise ConfigException('Config file {} should hold a JSON object'.format(path))
    return flatten(values)


class RunConfig(object):
    """Everything that determines a training run. Tool endpoints live
    under tools.<TOOL NAME> and switch that tool to an external server."""
    def __init__(self, values=None):
        for key, value in TOP_LEVEL_DEFAULTS.items():
            setattr(self, key, value)
        self.model = collections.OrderedDict(MODEL_DEFAULTS)
        self.optim = OptimConfig()
        self.tools = collections.OrderedDict()
        if values:
            self.update(values)

    def update(self, values):
        """Apply flat (or nested) overrides and validate the result."""
        optim = self.optim.to_dict()
        for key, value in flatten(values).items():
            section, _, name = key.partition('.')
            if not name:
                if key not in TOP_LEVEL_DEFAULTS:
                    raise ConfigException('Unknown config key {}'.format(key))
                setattr(self, key, value)
            elif section == 'model':
                if name not in MODEL_DEFAULTS:
                    raise ConfigException('Unknown config key {}'.format(key))
                self.model[name] = value
            elif section == 'optim':
                if name not in optim:
                    raise ConfigException('Unknown config key {}'.format(key))
                optim[name] = value
            elif section == 'tools':
                self.tools[name.upper()] = value
            else:
                raise ConfigException('Unknown config key {}'.format(key))
        try:
            self.optim = OptimConfig.from_dict(optim)
        except (OptimizerException, TypeError) as e:
            raise ConfigException('Invalid optimizer config: {}'.format(e))
        self.validate()
        return self

    def validate(self):
        if self.mode not in MODES:
            raise ConfigException('mode should be one of {}, got {!r}'.format(', '.join(MODES), self.mode))
        if self.strategy not in STRATEGIES:
            raise ConfigException('strategy should be one of {}, got {!r}'.format(
                ', '.join(STRATEGIES), self.strategy))
        for key in ('epochs_per_task', 'batch_size', 'eval_batch_size', 'eval_workers'):
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigException('{} should be a positive integer, got {!r}'.format(key, value))
        for key in ('eval_subset_size', 'max_new_tokens', 'seed'):
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigException('{} should be a non-negative integer, got {!r}'.format(key, value))
        if self.task_order_seed is not None and (not isinstance(self.task_order_seed, int)
                                                 or self.task_order_seed < 0):
            raise ConfigException('task_order_seed should be a non-negative integer or null')
        if self.tool_timeout <= 0:
            raise ConfigException('tool_timeout should be positive')

    def model_config(self, vocab_size, context_len=None):
        """ModelConfig for a vocabulary. An unset model.context_len is
        taken from the benchmark (context_len argument)."""
        values = dict(self.model)
        values['context_len'] = values['context_len'] or context_len
        if values['context_len'] is None:
            raise ConfigException('model.context_len is unset and the benchmark does not provide one')
        try:
            return ModelConfig(vocab_size, **values)
        except (ModelException, TypeError) as e:
            raise ConfigException('Invalid model config: {}'.format(e))

    def resolve(self, manifest):
        """Fill the values that default to properties of the benchmark."""
        if self.benchmark is None:
            self.benchmark = manifest.get('benchmark')
        if self.model['context_len'] is None:
            self.model['context_len'] = manifest.get('context_len')
        new_tokens = manifest.get('new_tokens')
        if new_tokens is not None and self.max_new_tokens < new_tokens:
            LOGGER.info('Raising max_new_tokens from {} to {} to fit the longest target'.format(
                self.max_new_tokens, new_tokens))
            self.max_new_tokens = new_tokens
        return self

    def to_flat(self):
        flat = collections.OrderedDict((k, getattr(self, k)) for k in TOP_LEVEL_DEFAULTS)
        flat.update(('model.' + k, v) for k, v in self.model.items())
        flat.update(('optim.' + k, v) for k, v in self.optim.to_dict().items())
        flat.update(('tools.' + k, v) for k, v in self.tools.items())
        return flat

    @classmethod
    def from_flat(cls, values):
        return cls(values)

    def save(self, path):
        with io.open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_flat(), f, indent=2)
            f.write('\n')

    @classmethod
    def load(cls, path):
        return cls(load_config_file(path))

    def __repr__(self):
        return 'RunConfig(benchmark={}, mode={}, strategy={}, seed={})'.format(
            self.benchmark, self.mode, self.strategy, self.seed)
