"""AdamW with decoupled weight decay and a linear warmup then
linear decay learning rate schedule that restarts for every task."""
import collections
import logging
import math

import numpy as np

from toolcl.exceptions import OptimizerException

__all__ = ['OptimConfig',
           'OptimState',
           'lr_at',
           'warmup_steps',
           'adamw_step',
           'clip_gradients',
           'global_norm']

LOGGER = logging.getLogger(__name__)


class OptimConfig(object):
    def __init__(self, peak_lr=3e-4, weight_decay=0.01, beta1=0.9, beta2=0.99, eps=1e-8,
                 warmup_frac=0.1, grad_clip=0.0, moments_reset=True):
        self.peak_lr = peak_lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.warmup_frac = warmup_frac
        self.grad_clip = grad_clip
        self.moments_reset = moments_reset
        self.validate()

    def validate(self):
        if self.peak_lr < 0:
            raise OptimizerException('peak_lr should not be negative')
        if self.weight_decay < 0:
            raise OptimizerException('weight_decay should not be negative')
        if not 0 <= self.warmup_frac < 1:
            raise OptimizerException('warmup_frac should be in [0, 1), got {}'.format(self.warmup_frac))
        for name in ('beta1', 'beta2'):
            if not 0 <= getattr(self, name) < 1:
                raise OptimizerException('{} should be in [0, 1)'.format(name))
        if self.eps <= 0:
            raise OptimizerException('eps should be positive')
        if self.grad_clip < 0:
            raise OptimizerException('grad_clip should not be negative')

    def to_dict(self):
        return collections.OrderedDict(
            (k, getattr(self, k)) for k in ('peak_lr', 'weight_decay', 'beta1', 'beta2', 'eps',
                                            'warmup_frac', 'grad_clip', 'moments_reset'))

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class OptimState(object):
    """First and second moments per parameter tensor plus the number
    of updates applied since the last reset."""
    def __init__(self, params):
        self.m = collections.OrderedDict((k, np.zeros_like(v)) for k, v in params.items())
        self.v = collections.OrderedDict((k, np.zeros_like(v)) for k, v in params.items())
        self.t = 0

    def reset(self):
        for k in self.m:
            self.m[k].fill(0)
            self.v[k].fill(0)
        self.t = 0


def warmup_steps(total_steps, cfg):
    return int(math.ceil(cfg.warmup_frac * total_steps))


def lr_at(step, total_steps, cfg):
    """Learning rate for a step of the current task.

    lr_at(550, 1000, OptimConfig(peak_lr=1.0)) == 450 / 900
    """
    if total_steps < 1:
        raise OptimizerException('total_steps should be at least 1')
    if step < 0:
        raise OptimizerException('step should not be negative')
    if step >= total_steps:
        return 0.0
    warmup = warmup_steps(total_steps, cfg)
    if step < warmup:
        return cfg.peak_lr * step / warmup
    return cfg.peak_lr * (total_steps - step) / (total_steps - warmup)


def global_norm(grads):
    return math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values()))


def clip_gradients(grads, max_norm):
    if max_norm <= 0:
        return grads
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / (norm + 1e-12)
    return collections.OrderedDict((k, g * scale) for k, g in grads.items())


def adamw_step(params, grads, state, lr, cfg):
    """Update params in place: decoupled decay theta *= 1 - lr * wd,
    then the bias corrected Adam step. Returns params."""
    if set(grads) != set(params):
        raise OptimizerException('Gradients do not cover the parameters')
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise OptimizerException('Gradient of {} has shape {}, expected {}'.format(
                name, g.shape, params[name].shape), name)
        if not np.all(np.isfinite(g)):
            raise OptimizerException('Non-finite gradient in tensor {}'.format(name), name)
    grads = clip_gradients(grads, cfg.grad_clip)
    state.t += 1
    correction1 = 1.0 - cfg.beta1 ** state.t
    correction2 = 1.0 - cfg.beta2 ** state.t
    for name, theta in params.items():
        g = grads[name]
        m, v = state.m[name], state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        if cfg.weight_decay:
            theta *= 1.0 - lr * cfg.weight_decay
        theta -= (lr * (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)).astype(theta.dtype)
    return params
