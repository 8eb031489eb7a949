"""Checkpoint files.

Layout:

    8 bytes     magic b'TOOLCLv1'
    8 bytes     header length N, unsigned big endian ('!Q')
    N bytes     UTF-8 JSON header
    ...         raw little endian tensor data, C order

The header holds the model config, the seed, free form metadata, the
optimizer step and one entry per tensor with its group ('params',
'm' or 'v'), name, dtype, shape and byte offset relative to the end
of the header.
"""
import collections
import io
import json
import logging
import struct

import numpy as np

from toolcl.data.constants import CHECKPOINT_MAGIC
from toolcl.exceptions import ModelException
from toolcl.model.optimizer import OptimState
from toolcl.model.transformer import ModelConfig, param_shapes

__all__ = ['Checkpoint',
           'save_checkpoint',
           'load_checkpoint']

LOGGER = logging.getLogger(__name__)

Checkpoint = collections.namedtuple('Checkpoint', ['config', 'params', 'seed', 'state', 'meta'])

_HEADER_LEN = struct.Struct('!Q')


def _tensor_groups(params, state):
    yield 'params', params
    if state is not None:
        yield 'm', state.m
        yield 'v', state.v


def save_checkpoint(path, config, params, seed, state=None, meta=None):
    tensors = []
    blobs = []
    offset = 0
    for group, tensors_of_group in _tensor_groups(params, state):
        for name, value in tensors_of_group.items():
            data = np.ascontiguousarray(value, dtype=value.dtype.newbyteorder('<')).tobytes()
            tensors.append(collections.OrderedDict([
                ('group', group), ('name', name), ('dtype', value.dtype.name),
                ('shape', list(value.shape)), ('offset', offset), ('nbytes', len(data))]))
            blobs.append(data)
            offset += len(data)
    header = collections.OrderedDict([
        ('config', config.to_dict()),
        ('seed', seed),
        ('step', state.t if state is not None else None),
        ('meta', meta or {}),
        ('tensors', tensors)])
    header = json.dumps(header, sort_keys=False).encode('utf-8')
    with io.open(path, 'wb') as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(_HEADER_LEN.pack(len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)
    LOGGER.debug('Wrote checkpoint {} ({} tensors, {} bytes)'.format(path, len(tensors), offset))


def load_checkpoint(path):
    with io.open(path, 'rb') as f:
        data = f.read()
    if data[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ModelException('{} is not a checkpoint file'.format(path))
    start = len(CHECKPOINT_MAGIC)
    try:
        header_len, = _HEADER_LEN.unpack_from(data, start)
        start += _HEADER_LEN.size
        header = json.loads(data[start:start + header_len].decode('utf-8'))
    except (struct.error, ValueError) as e:
        raise ModelException('Corrupt checkpoint header in {}: {}'.format(path, e))
    body = start + header_len
    config = ModelConfig.from_dict(header['config'])
    groups = {'params': collections.OrderedDict(), 'm': collections.OrderedDict(),
              'v': collections.OrderedDict()}
    for entry in header['tensors']:
        begin = body + entry['offset']
        if begin + entry['nbytes'] > len(data):
            raise ModelException('Checkpoint {} is truncated'.format(path))
        dtype = np.dtype(entry['dtype']).newbyteorder('<')
        value = np.frombuffer(data, dtype=dtype, count=entry['nbytes'] // dtype.itemsize, offset=begin)
        groups[entry['group']][entry['name']] = value.reshape(entry['shape']).astype(entry['dtype'])
    params = groups['params']
    expected = param_shapes(config)
    if list(params) != list(expected) or any(params[k].shape != tuple(s) for k, s in expected.items()):
        raise ModelException('Checkpoint {} does not match its model config'.format(path))
    state = None
    if header.get('step') is not None:
        state = OptimState(params)
        state.m.update(groups['m'])
        state.v.update(groups['v'])
        state.t = header['step']
    return Checkpoint(config, params, header['seed'], state, header.get('meta', {}))
