"""Deterministic character level tokenizer. Ids 0..3 are the special
tokens PAD, BOS, SEP and EOS, every other id is one character."""
import collections
import io
import json
import logging

import numpy as np

from toolcl.data.constants import SPECIAL_TOKENS, VOCABULARY_SYMBOLS
from toolcl.exceptions import TokenizerException, PackingException

__all__ = ['Vocabulary',
           'PackedSamples',
           'pack_samples']

LOGGER = logging.getLogger(__name__)

# indices: positions of the packed rows in the input sample list
PackedSamples = collections.namedtuple('PackedSamples', ['inputs', 'targets', 'mask', 'rejected', 'indices'])


class Vocabulary(object):
    """Bijective mapping between characters and dense ids. Immutable
    after construction."""
    def __init__(self, symbols=VOCABULARY_SYMBOLS, specials=SPECIAL_TOKENS):
        symbols = list(symbols)
        if len(set(symbols)) != len(symbols) or any(len(s) != 1 for s in symbols):
            raise TokenizerException('Symbols should be distinct single characters')
        if list(specials[:4]) != ['PAD', 'BOS', 'SEP', 'EOS']:
            raise TokenizerException('Specials should start with PAD, BOS, SEP, EOS')
        self.specials = list(specials)
        self.symbols = symbols
        self.pad_id, self.bos_id, self.sep_id, self.eos_id = range(4)
        self._offset = len(self.specials)
        self._ids = {s: i + self._offset for i, s in enumerate(self.symbols)}

    def __len__(self):
        return self._offset + len(self.symbols)

    @property
    def size(self):
        return len(self)

    def encode(self, text):
        """One id per character, no special tokens.

        Vocabulary().decode(Vocabulary().encode('ADD(5, 5)'))
        'ADD(5, 5)'
        """
        ids = []
        for offset, char in enumerate(text):
            try:
                ids.append(self._ids[char])
            except KeyError:
                raise TokenizerException(
                    'Character {!r} at offset {} is not in the vocabulary'.format(char, offset), offset)
        return ids

    def decode(self, ids):
        """Inverse of encode. PAD, BOS and SEP are skipped, EOS ends
        the text."""
        chars = []
        for i in ids:
            i = int(i)
            if i < 0 or i >= len(self):
                raise TokenizerException('Invalid token id {}'.format(i))
            if i == self.eos_id:
                break
            if i < self._offset:
                continue
            chars.append(self.symbols[i - self._offset])
        return ''.join(chars)

    def pack_example(self, query_ids, target_ids, context_len):
        """Lay out BOS query SEP target EOS PAD... and return input ids,
        next-token targets and a loss mask that is one exactly where the
        next token is a target token or EOS."""
        sequence = [self.bos_id] + list(query_ids) + [self.sep_id] + list(target_ids) + [self.eos_id]
        if len(sequence) > context_len:
            raise PackingException('Sequence of length {} exceeds context length {}'.format(
                len(sequence), context_len))
        inputs = np.full(context_len, self.pad_id, dtype=np.int64)
        targets = np.full(context_len, self.pad_id, dtype=np.int64)
        mask = np.zeros(context_len, dtype=np.int8)
        inputs[:len(sequence)] = sequence
        targets[:len(sequence) - 1] = sequence[1:]
        # position of SEP predicts the first target token
        start = len(query_ids) + 1
        mask[start:start + len(target_ids) + 1] = 1
        return inputs, targets, mask

    def prompt(self, query_ids):
        return [self.bos_id] + list(query_ids) + [self.sep_id]

    def to_dict(self):
        return collections.OrderedDict([('specials', self.specials), ('symbols', self.symbols)])

    @classmethod
    def from_dict(cls, d):
        return cls(symbols=d['symbols'], specials=d['specials'])

    def save(self, path):
        with io.open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path):
        with io.open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


def pack_samples(vocab, samples, context_len, target_field='api_call'):
    """Pack samples into [N x context_len] arrays. Samples that do not
    fit are rejected and counted."""
    inputs, targets, masks, indices = [], [], [], []
    rejected = 0
    for index, sample in enumerate(samples):
        try:
            packed = vocab.pack_example(vocab.encode(sample.query),
                                        vocab.encode(getattr(sample, target_field)), context_len)
        except PackingException:
            rejected += 1
            continue
        inputs.append(packed[0])
        targets.append(packed[1])
        masks.append(packed[2])
        indices.append(index)
    if rejected:
        LOGGER.warning('Rejected {} of {} samples longer than the context length {}'.format(
            rejected, len(samples), context_len))
    if not inputs:
        empty = np.zeros((0, context_len), dtype=np.int64)
        return PackedSamples(empty, empty.copy(), empty.astype(np.int8), rejected, indices)
    return PackedSamples(np.stack(inputs), np.stack(targets), np.stack(masks), rejected, indices)
