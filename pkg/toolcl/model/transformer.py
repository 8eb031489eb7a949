"""Decoder-only causal transformer in numpy with analytic gradients.

Pre-normalization residual blocks, learned absolute positions and
untied input/output embeddings. Parameters are an ordered dict of
named arrays:

    wte                 [V x d]     token embeddings
    wpe                 [C x d]     position embeddings
    h.<i>.ln1.g/b       [d]         normalization before attention
    h.<i>.attn.w_qkv    [d x 3d]    query/key/value projection
    h.<i>.attn.b_qkv    [3d]
    h.<i>.attn.w_o      [d x d]     attention output projection
    h.<i>.attn.b_o      [d]
    h.<i>.ln2.g/b       [d]         normalization before the MLP
    h.<i>.mlp.w_in      [d x ff]
    h.<i>.mlp.b_in      [ff]
    h.<i>.mlp.w_out     [ff x d]
    h.<i>.mlp.b_out     [d]
    ln_f.g/b            [d]         final normalization
    head.w              [d x V]     output projection
    head.b              [V]
"""
import collections
import logging
import math

import numpy as np

from toolcl.data.constants import DEFAULT_CONTEXT_LEN
from toolcl.exceptions import ModelException

__all__ = ['ModelConfig',
           'Batch',
           'param_shapes',
           'count_params',
           'init_params',
           'forward',
           'loss_and_grads',
           'generate_greedy',
           'generate_batch',
           'LN_EPS']

LOGGER = logging.getLogger(__name__)
LN_EPS = 1e-5
_GELU_K = math.sqrt(2.0 / math.pi)
_GELU_C = 0.044715

Batch = collections.namedtuple('Batch', ['inputs', 'targets', 'mask'])


class ModelConfig(object):
    def __init__(self, vocab_size, d_model=128, n_layers=4, n_heads=4, d_ff=512,
                 context_len=DEFAULT_CONTEXT_LEN, init_std=0.02, dtype='float32'):
        self.vocab_size = vocab_size
        self.d_model = d_model
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.context_len = context_len
        self.init_std = init_std
        self.dtype = dtype
        self.validate()

    def validate(self):
        for field in ('vocab_size', 'd_model', 'n_layers', 'n_heads', 'd_ff', 'context_len'):
            value = getattr(self, field)
            if not isinstance(value, int) or value < 1:
                raise ModelException('{} should be a positive integer, got {!r}'.format(field, value))
        if self.d_model % self.n_heads:
            raise ModelException('d_model {} is not divisible by n_heads {}'.format(
                self.d_model, self.n_heads))
        if self.init_std < 0:
            raise ModelException('init_std should not be negative')
        if self.dtype not in ('float32', 'float64'):
            raise ModelException('dtype should be float32 or float64, got {}'.format(self.dtype))

    @property
    def head_dim(self):
        return self.d_model // self.n_heads

    def to_dict(self):
        return collections.OrderedDict(
            (k, getattr(self, k)) for k in ('vocab_size', 'd_model', 'n_layers', 'n_heads',
                                            'd_ff', 'context_len', 'init_std', 'dtype'))

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def __eq__(self, other):
        return isinstance(other, ModelConfig) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return 'ModelConfig({})'.format(', '.join('{}={}'.format(k, v) for k, v in self.to_dict().items()))


def param_shapes(config):
    d, ff, V = config.d_model, config.d_ff, config.vocab_size
    shapes = collections.OrderedDict()
    shapes['wte'] = (V, d)
    shapes['wpe'] = (config.context_len, d)
    for i in range(config.n_layers):
        p = 'h.{}.'.format(i)
        shapes[p + 'ln1.g'] = (d,)
        shapes[p + 'ln1.b'] = (d,)
        shapes[p + 'attn.w_qkv'] = (d, 3 * d)
        shapes[p + 'attn.b_qkv'] = (3 * d,)
        shapes[p + 'attn.w_o'] = (d, d)
        shapes[p + 'attn.b_o'] = (d,)
        shapes[p + 'ln2.g'] = (d,)
        shapes[p + 'ln2.b'] = (d,)
        shapes[p + 'mlp.w_in'] = (d, ff)
        shapes[p + 'mlp.b_in'] = (ff,)
        shapes[p + 'mlp.w_out'] = (ff, d)
        shapes[p + 'mlp.b_out'] = (d,)
    shapes['ln_f.g'] = (d,)
    shapes['ln_f.b'] = (d,)
    shapes['head.w'] = (d, V)
    shapes['head.b'] = (V,)
    return shapes


def count_params(config):
    return sum(int(np.prod(shape)) for shape in param_shapes(config).values())


def init_params(config, seed):
    """Matrices ~ N(0, init_std^2), biases 0, normalization gains 1.
    Deterministic per (config, seed)."""
    rng = np.random.default_rng(seed)
    params = collections.OrderedDict()
    for name, shape in param_shapes(config).items():
        if name.endswith('.g'):
            value = np.ones(shape)
        elif len(shape) == 1:
            value = np.zeros(shape)
        else:
            value = rng.normal(0.0, config.init_std, size=shape)
        params[name] = value.astype(config.dtype)
    return params


def _layer_norm(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    rstd = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xhat = xc * rstd
    return xhat * g + b, (xhat, rstd)


def _layer_norm_backward(dy, g, cache):
    xhat, rstd = cache
    axes = tuple(range(dy.ndim - 1))
    dg = (dy * xhat).sum(axes)
    db = dy.sum(axes)
    dxhat = dy * g
    dx = rstd * (dxhat - dxhat.mean(-1, keepdims=True)
                 - xhat * (dxhat * xhat).mean(-1, keepdims=True))
    return dx, dg, db


def _gelu(u):
    t = np.tanh(_GELU_K * (u + _GELU_C * u ** 3))
    return 0.5 * u * (1.0 + t), t


def _gelu_backward(du_out, u, t):
    return du_out * (0.5 * (1.0 + t)
                     + 0.5 * u * (1.0 - t * t) * _GELU_K * (1.0 + 3.0 * _GELU_C * u * u))


def _split_heads(x, n_heads):
    B, L, d = x.shape
    return x.reshape(B, L, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    B, H, L, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, L, H * dh)


def _softmax(scores):
    scores = scores - scores.max(-1, keepdims=True)
    e = np.exp(scores)
    return e / e.sum(-1, keepdims=True)


def _attention(h, w_qkv, b_qkv, n_heads):
    L = h.shape[1]
    qkv = h @ w_qkv + b_qkv
    q, k, v = (_split_heads(part, n_heads) for part in np.split(qkv, 3, axis=-1))
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale
    causal = np.tril(np.ones((L, L), dtype=bool))
    att = _softmax(np.where(causal, scores, -np.inf))
    out = _merge_heads(att @ v)
    return out, (q, k, v, att, scale)


def _attention_backward(dout, h, w_qkv, cache, n_heads):
    q, k, v, att, scale = cache
    dout = _split_heads(dout, n_heads)
    datt = dout @ v.transpose(0, 1, 3, 2)
    dv = att.transpose(0, 1, 3, 2) @ dout
    dscores = att * (datt - (datt * att).sum(-1, keepdims=True)) * scale
    dq = dscores @ k
    dk = dscores.transpose(0, 1, 3, 2) @ q
    dqkv = np.concatenate([_merge_heads(dq), _merge_heads(dk), _merge_heads(dv)], axis=-1)
    d = h.shape[-1]
    dw_qkv = h.reshape(-1, d).T @ dqkv.reshape(-1, 3 * d)
    db_qkv = dqkv.sum((0, 1))
    dh = dqkv @ w_qkv.T
    return dh, dw_qkv, db_qkv


def _check_ids(config, ids):
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise ModelException('Input ids should be a [batch x length] array, got shape {}'.format(ids.shape))
    if ids.shape[1] > config.context_len:
        raise ModelException('Sequence length {} exceeds context length {}'.format(
            ids.shape[1], config.context_len))
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ModelException('Token ids should be in [0, {})'.format(config.vocab_size))
    return ids


def _forward(config, params, ids):
    L = ids.shape[1]
    x = params['wte'][ids] + params['wpe'][:L]
    caches = []
    for i in range(config.n_layers):
        p = 'h.{}.'.format(i)
        h, ln1 = _layer_norm(x, params[p + 'ln1.g'], params[p + 'ln1.b'])
        a, attn = _attention(h, params[p + 'attn.w_qkv'], params[p + 'attn.b_qkv'], config.n_heads)
        x = x + a @ params[p + 'attn.w_o'] + params[p + 'attn.b_o']
        h2, ln2 = _layer_norm(x, params[p + 'ln2.g'], params[p + 'ln2.b'])
        u = h2 @ params[p + 'mlp.w_in'] + params[p + 'mlp.b_in']
        act, t = _gelu(u)
        x = x + act @ params[p + 'mlp.w_out'] + params[p + 'mlp.b_out']
        caches.append((h, ln1, a, attn, h2, ln2, u, t, act))
    hf, lnf = _layer_norm(x, params['ln_f.g'], params['ln_f.b'])
    logits = hf @ params['head.w'] + params['head.b']
    return logits, (caches, hf, lnf)


def forward(config, params, ids):
    """Logits [B x L x V]; position i only sees positions <= i."""
    return _forward(config, params, _check_ids(config, ids))[0]


def _backward(config, params, ids, dlogits, cache):
    caches, hf, lnf = cache
    d, V = config.d_model, config.vocab_size
    grads = collections.OrderedDict((name, None) for name in params)
    grads['head.w'] = hf.reshape(-1, d).T @ dlogits.reshape(-1, V)
    grads['head.b'] = dlogits.sum((0, 1))
    dx, grads['ln_f.g'], grads['ln_f.b'] = _layer_norm_backward(
        dlogits @ params['head.w'].T, params['ln_f.g'], lnf)
    for i in reversed(range(config.n_layers)):
        p = 'h.{}.'.format(i)
        h, ln1, a, attn, h2, ln2, u, t, act = caches[i]
        grads[p + 'mlp.w_out'] = act.reshape(-1, config.d_ff).T @ dx.reshape(-1, d)
        grads[p + 'mlp.b_out'] = dx.sum((0, 1))
        du = _gelu_backward(dx @ params[p + 'mlp.w_out'].T, u, t)
        grads[p + 'mlp.w_in'] = h2.reshape(-1, d).T @ du.reshape(-1, config.d_ff)
        grads[p + 'mlp.b_in'] = du.sum((0, 1))
        dln2, grads[p + 'ln2.g'], grads[p + 'ln2.b'] = _layer_norm_backward(
            du @ params[p + 'mlp.w_in'].T, params[p + 'ln2.g'], ln2)
        dx = dx + dln2
        grads[p + 'attn.w_o'] = a.reshape(-1, d).T @ dx.reshape(-1, d)
        grads[p + 'attn.b_o'] = dx.sum((0, 1))
        dh, grads[p + 'attn.w_qkv'], grads[p + 'attn.b_qkv'] = _attention_backward(
            dx @ params[p + 'attn.w_o'].T, h, params[p + 'attn.w_qkv'], attn, config.n_heads)
        dln1, grads[p + 'ln1.g'], grads[p + 'ln1.b'] = _layer_norm_backward(
            dh, params[p + 'ln1.g'], ln1)
        dx = dx + dln1
    L = ids.shape[1]
    wte = np.zeros_like(params['wte'])
    np.add.at(wte, ids.reshape(-1), dx.reshape(-1, d))
    grads['wte'] = wte
    wpe = np.zeros_like(params['wpe'])
    wpe[:L] = dx.sum(0)
    grads['wpe'] = wpe
    return grads


def loss_and_grads(config, params, batch):
    """Mean cross-entropy over the masked positions and the gradient
    of every parameter tensor."""
    ids = _check_ids(config, batch.inputs)
    targets = np.asarray(batch.targets)
    mask = np.asarray(batch.mask).astype(params['wte'].dtype)
    if targets.shape != ids.shape or mask.shape != ids.shape:
        raise ModelException('inputs, targets and mask should have equal shapes')
    count = mask.sum()
    if count == 0:
        raise ModelException('Loss mask has no nonzero entry')
    logits, cache = _forward(config, params, ids)
    shifted = logits - logits.max(-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(-1, keepdims=True))
    logp = shifted - lse
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    loss = -float((picked * mask).sum() / count)
    dlogits = np.exp(logp)
    np.put_along_axis(dlogits, targets[..., None],
                      np.take_along_axis(dlogits, targets[..., None], axis=-1) - 1.0, axis=-1)
    dlogits *= (mask / count)[..., None]
    return loss, _backward(config, params, ids, dlogits.astype(logits.dtype), cache)


def _decode_step(config, params, tokens, positions, kv):
    """One incremental step: tokens [N] at per-row positions [N],
    keys/values of earlier positions are read from and written to kv."""
    N = tokens.shape[0]
    rows = np.arange(N)
    x = (params['wte'][tokens] + params['wpe'][positions])[:, None, :]
    width = kv[0][0].shape[2]
    visible = np.arange(width)[None, :] <= positions[:, None]
    for i in range(config.n_layers):
        p = 'h.{}.'.format(i)
        keys, values = kv[i]
        h, _ = _layer_norm(x, params[p + 'ln1.g'], params[p + 'ln1.b'])
        qkv = h @ params[p + 'attn.w_qkv'] + params[p + 'attn.b_qkv']
        q, k, v = (_split_heads(part, config.n_heads) for part in np.split(qkv, 3, axis=-1))
        keys[rows, :, positions] = k[:, :, 0]
        values[rows, :, positions] = v[:, :, 0]
        scores = (q @ keys.transpose(0, 1, 3, 2)) / math.sqrt(config.head_dim)
        att = _softmax(np.where(visible[:, None, None, :], scores, -np.inf))
        x = x + _merge_heads(att @ values) @ params[p + 'attn.w_o'] + params[p + 'attn.b_o']
        h2, _ = _layer_norm(x, params[p + 'ln2.g'], params[p + 'ln2.b'])
        act, _ = _gelu(h2 @ params[p + 'mlp.w_in'] + params[p + 'mlp.b_in'])
        x = x + act @ params[p + 'mlp.w_out'] + params[p + 'mlp.b_out']
    hf, _ = _layer_norm(x, params['ln_f.g'], params['ln_f.b'])
    return (hf @ params['head.w'] + params['head.b'])[:, 0, :]


def _prefill(config, params, ids, width):
    """Run the padded prompts once and keep their keys and values in
    buffers wide enough for the whole generation."""
    N, L = ids.shape
    x = params['wte'][ids] + params['wpe'][:L]
    kv = []
    for i in range(config.n_layers):
        p = 'h.{}.'.format(i)
        h, _ = _layer_norm(x, params[p + 'ln1.g'], params[p + 'ln1.b'])
        a, (q, k, v, att, scale) = _attention(h, params[p + 'attn.w_qkv'], params[p + 'attn.b_qkv'],
                                              config.n_heads)
        keys = np.zeros((N, config.n_heads, width, config.head_dim), dtype=x.dtype)
        values = np.zeros_like(keys)
        keys[:, :, :L] = k
        values[:, :, :L] = v
        kv.append((keys, values))
        x = x + a @ params[p + 'attn.w_o'] + params[p + 'attn.b_o']
        h2, _ = _layer_norm(x, params[p + 'ln2.g'], params[p + 'ln2.b'])
        act, _ = _gelu(h2 @ params[p + 'mlp.w_in'] + params[p + 'mlp.b_in'])
        x = x + act @ params[p + 'mlp.w_out'] + params[p + 'mlp.b_out']
    hf, _ = _layer_norm(x, params['ln_f.g'], params['ln_f.b'])
    return hf @ params['head.w'] + params['head.b'], kv


def generate_batch(config, params, prompts, max_new_tokens, eos_id, pad_id=0, sep_id=None):
    """Greedy continuation of every prompt. A row stops at EOS (not
    included in its output), after max_new_tokens or at the end of
    the context. With sep_id every prompt has to end with it."""
    if not prompts:
        return []
    lengths = np.array([len(p) for p in prompts])
    if lengths.min() < 1:
        raise ModelException('Prompts should not be empty')
    if sep_id is not None and any(p[-1] != sep_id for p in prompts):
        raise ModelException('Prompts should end with the separator token')
    if lengths.max() >= config.context_len:
        raise ModelException('Prompt of length {} leaves no room in context length {}'.format(
            lengths.max(), config.context_len))
    outputs = [[] for _ in prompts]
    if max_new_tokens <= 0:
        return outputs
    N = len(prompts)
    width = int(min(config.context_len, lengths.max() + max_new_tokens))
    ids = np.full((N, lengths.max()), pad_id, dtype=np.int64)
    for row, prompt in enumerate(prompts):
        ids[row, :len(prompt)] = prompt
    _check_ids(config, ids)
    logits, kv = _prefill(config, params, ids, width)
    rows = np.arange(N)
    next_tokens = logits[rows, lengths - 1].argmax(-1)
    positions = lengths.copy()
    active = np.ones(N, dtype=bool)
    for step in range(max_new_tokens):
        for row in np.nonzero(active)[0]:
            token = int(next_tokens[row])
            if token == eos_id:
                active[row] = False
            else:
                outputs[row].append(token)
                if positions[row] >= config.context_len - 1 or step == max_new_tokens - 1:
                    active[row] = False
        if not active.any():
            break
        # finished rows keep decoding a harmless token at a clamped position
        step_positions = np.minimum(positions, width - 1)
        logits = _decode_step(config, params, np.where(active, next_tokens, pad_id), step_positions, kv)
        next_tokens = logits.argmax(-1)
        positions = np.where(active, positions + 1, positions)
    return outputs


def generate_greedy(config, params, prompt_ids, max_new_tokens, eos_id, sep_id=None):
    return generate_batch(config, params, [list(prompt_ids)], max_new_tokens, eos_id, sep_id=sep_id)[0]
