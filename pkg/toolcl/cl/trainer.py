"""Continual learning over a stream of tool tasks: sequential fine
tuning, episodic replay and the mixed dataset baseline."""
import collections
import logging
import math
import os
import random

import numpy as np

from toolcl.cl.evaluation import build_registry, evaluate
from toolcl.cl.matrix import AccuracyMatrix
from toolcl.cl.replay import ReplayBuffer, reservoir_insert
from toolcl.exceptions import TrainingException, PackingException, TokenizerException
from toolcl.model.checkpoint import save_checkpoint
from toolcl.model.optimizer import OptimState, adamw_step, lr_at
from toolcl.model.transformer import Batch, init_params, loss_and_grads
from toolcl.tokenizer import Vocabulary, pack_samples
from toolcl.utils import derive_seed

__all__ = ['TrainResult',
           'ContinualTrainer',
           'task_order',
           'train_sequential',
           'train_er',
           'train_mixed']

LOGGER = logging.getLogger(__name__)
_SHUFFLE_STREAM = 11
_REPLAY_STREAM = 12
_PARAM_STREAM = 13

TrainResult = collections.namedtuple('TrainResult', ['matrix', 'api_matrix', 'checkpoints', 'order',
                                                     'losses'])


def task_order(num_tasks, task_order_seed):
    """Positions of the benchmark tasks in training order: the identity
    without a seed, a seeded permutation otherwise."""
    if task_order_seed is None:
        return list(range(num_tasks))
    return [int(i) for i in np.random.default_rng(task_order_seed).permutation(num_tasks)]


class ContinualTrainer(object):
    """Owns the parameters and optimizer state of one run. The training
    sequence is single threaded; only evaluation fans out."""
    def __init__(self, tasks, run_config, seed=None, run_dir=None, registry=None, vocab=None):
        if not tasks:
            raise TrainingException('At least one task is required')
        self.run_config = run_config
        self.seed = run_config.seed if seed is None else seed
        self.run_dir = run_dir
        self.vocab = vocab or Vocabulary()
        self.order = task_order(len(tasks), run_config.task_order_seed)
        self.tasks = [tasks[i] for i in self.order]
        self.config = run_config.model_config(len(self.vocab))
        self.params = init_params(self.config, derive_seed(self.seed, _PARAM_STREAM))
        self.state = OptimState(self.params)
        self.registry = registry or build_registry(tasks, run_config.tools, run_config.tool_timeout)
        self.target_field = 'api_call' if run_config.mode == 'tools' else 'raw_answer'
        self.np_rng = np.random.default_rng(derive_seed(self.seed, _SHUFFLE_STREAM))
        self.replay_rng = random.Random(derive_seed(self.seed, _REPLAY_STREAM))
        self.replay = None
        if run_config.strategy == 'er':
            self.replay = ReplayBuffer.for_tasks(len(tasks))
        labels = ['task_{}'.format(i + 1) for i in self.order]
        self.matrix = AccuracyMatrix(labels)
        self.api_matrix = AccuracyMatrix(labels) if run_config.mode == 'tools' else None
        self.checkpoints = []
        self.losses = []

    def _pack(self, samples):
        try:
            packed = pack_samples(self.vocab, samples, self.config.context_len, self.target_field)
        except TokenizerException as e:
            raise TrainingException('Cannot encode training data: {}'.format(e))
        return packed

    @staticmethod
    def _batch(inputs, targets, mask):
        # positions after the last masked one never influence the loss
        width = int(np.max(np.nonzero(mask.any(0))[0])) + 1
        return Batch(inputs[:, :width], targets[:, :width], mask[:, :width])

    def _replay_batch(self):
        samples = self.replay.sample(self.run_config.batch_size, self.replay_rng)
        if not samples:
            return None
        packed = self._pack(samples)
        if not len(packed.inputs):
            return None
        return self._batch(packed.inputs, packed.targets, packed.mask)

    def fit(self, samples, name, replay=False):
        """Train on samples for epochs_per_task passes with a fresh
        learning rate schedule. With replay every step adds the loss of
        a batch from the replay buffer, and the samples of the first
        pass are streamed into the buffer. Returns the mean loss of the
        last epoch."""
        packed = self._pack(samples)
        n = len(packed.inputs)
        if n == 0:
            raise TrainingException('Task {} has no trainable samples'.format(name))
        kept = [samples[i] for i in packed.indices]
        batch_size = self.run_config.batch_size
        steps_per_epoch = int(math.ceil(n / batch_size))
        total = steps_per_epoch * self.run_config.epochs_per_task
        if self.run_config.optim.moments_reset:
            self.state.reset()
        LOGGER.info('Training {}: {} samples, {} steps'.format(name, n, total))
        step = 0
        epoch_loss = float('nan')
        for epoch in range(self.run_config.epochs_per_task):
            permutation = self.np_rng.permutation(n)
            losses = []
            for start in range(0, n, batch_size):
                index = permutation[start:start + batch_size]
                batch = self._batch(packed.inputs[index], packed.targets[index], packed.mask[index])
                loss, grads = loss_and_grads(self.config, self.params, batch)
                replay_batch = self._replay_batch() if replay else None
                if replay_batch is not None:
                    replay_loss, replay_grads = loss_and_grads(self.config, self.params, replay_batch)
                    loss += replay_loss
                    for key, g in replay_grads.items():
                        grads[key] += g
                lr = lr_at(step, total, self.run_config.optim)
                adamw_step(self.params, grads, self.state, lr, self.run_config.optim)
                if not math.isfinite(loss):
                    raise TrainingException('Loss diverged on {} at step {}'.format(name, step))
                losses.append(loss)
                if self.replay is not None and epoch == 0:
                    for i in index:
                        reservoir_insert(self.replay, kept[i], self.replay_rng)
                step += 1
                LOGGER.debug('{} epoch {} step {}/{} lr {:.3e} loss {:.4f}'.format(
                    name, epoch + 1, step, total, lr, loss))
            epoch_loss = float(np.mean(losses))
            LOGGER.info('{} epoch {}: mean loss {:.4f}'.format(name, epoch + 1, epoch_loss))
        return epoch_loss

    def _evaluate(self, after_task, tasks_seen):
        row, api_row = evaluate(self.config, self.params, self.vocab, tasks_seen, self.run_config,
                                self.registry, after_task, self.seed)
        self.matrix.add_row(after_task, row)
        if self.api_matrix is not None:
            self.api_matrix.add_row(after_task, api_row)

    def _checkpoint(self, after_task):
        if self.run_dir is None:
            return
        directory = os.path.join(self.run_dir, 'checkpoints')
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, 'task_{}.ckpt'.format(after_task))
        save_checkpoint(path, self.config, self.params, self.seed, self.state,
                        meta={'after_task': after_task, 'order': self.order,
                              'strategy': self.run_config.strategy})
        self.checkpoints.append(path)

    def run_stream(self):
        """Sequential and replay strategies: train task after task and
        evaluate every task seen after each one."""
        for tau, task in enumerate(self.tasks, 1):
            if not task.train:
                raise TrainingException('Task {} has an empty train set'.format(task.name))
            # no replay while the buffer only holds the current task
            self.losses.append(self.fit(task.train, task.name, replay=self.replay is not None and tau > 1))
            self._checkpoint(tau)
            self._evaluate(tau, self.tasks[:tau])
        return self.result()

    def run_mixed(self):
        """One schedule over the shuffled union of all train sets, one
        evaluation at the end."""
        union = []
        for task in self.tasks:
            if not task.train:
                raise TrainingException('Task {} has an empty train set'.format(task.name))
            union.extend(task.train)
        self.losses.append(self.fit(union, 'mixed'))
        T = len(self.tasks)
        self._checkpoint(T)
        self._evaluate(T, self.tasks)
        return self.result()

    def run(self):
        if self.run_config.strategy == 'mixed':
            return self.run_mixed()
        return self.run_stream()

    def result(self):
        return TrainResult(self.matrix, self.api_matrix, list(self.checkpoints), list(self.order),
                           list(self.losses))

    def close(self):
        self.registry.close()


def _train(tasks, run_config, seed, strategy, run_dir=None, registry=None):
    if run_config.strategy != strategy:
        raise TrainingException('Run config asks for strategy {}, not {}'.format(
            run_config.strategy, strategy))
    trainer = ContinualTrainer(tasks, run_config, seed=seed, run_dir=run_dir, registry=registry)
    try:
        return trainer.run()
    finally:
        if registry is None:
            trainer.close()


def train_sequential(tasks, run_config, seed=None, run_dir=None, registry=None):
    return _train(tasks, run_config, seed, 'sequential', run_dir, registry)


def train_er(tasks, run_config, seed=None, run_dir=None, registry=None):
    return _train(tasks, run_config, seed, 'er', run_dir, registry)


def train_mixed(tasks, run_config, seed=None, run_dir=None, registry=None):
    return _train(tasks, run_config, seed, 'mixed', run_dir, registry)
