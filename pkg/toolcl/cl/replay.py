import logging

from toolcl.data.constants import REPLAY_SAMPLES_PER_TASK

__all__ = ['ReplayBuffer',
           'reservoir_insert']

LOGGER = logging.getLogger(__name__)


class ReplayBuffer(object):
    """Episodic memory of past samples, filled by reservoir sampling."""
    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError('Replay capacity should be positive')
        self.capacity = capacity
        self.items = []
        self.seen_count = 0

    @classmethod
    def for_tasks(cls, num_tasks, per_task=REPLAY_SAMPLES_PER_TASK):
        return cls(per_task * num_tasks)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def sample(self, n, rng):
        """Up to n distinct items drawn uniformly with a random.Random."""
        if not self.items:
            return []
        return [self.items[i] for i in rng.sample(range(len(self.items)), min(n, len(self.items)))]

    def __repr__(self):
        return 'ReplayBuffer({}/{}, seen={})'.format(len(self.items), self.capacity, self.seen_count)


def reservoir_insert(buffer, sample, rng):
    """Append while there is room, afterwards replace a random slot with
    probability capacity / (seen_count + 1)."""
    if buffer.seen_count < buffer.capacity:
        buffer.items.append(sample)
    else:
        slot = rng.randrange(buffer.seen_count + 1)
        if slot < buffer.capacity:
            buffer.items[slot] = sample
    buffer.seen_count += 1
    return buffer
