import json
import math
import os
import random
import shutil
import tempfile
import unittest
from unittest import mock

from toolcl.cl import (RunConfig, AccuracyMatrix, ReplayBuffer, reservoir_insert, ContinualTrainer,
                       eval_subset, evaluate_task, build_registry, task_order, train_sequential,
                       train_er, train_mixed)
from toolcl.exceptions import ConfigException, MetricsException, TrainingException
from toolcl.misc import setup_logger
from toolcl.tasks import TaskDataset, gen_toy_benchmark, gen_cls_benchmark, required_new_tokens
from toolcl.tokenizer import Vocabulary

TINY = {'model.d_model': 16, 'model.n_layers': 1, 'model.n_heads': 2, 'model.d_ff': 32,
        'model.context_len': 64, 'epochs_per_task': 1, 'batch_size': 8, 'eval_subset_size': 6,
        'eval_batch_size': 8, 'max_new_tokens': 12}


def tiny_tasks(train_size=16, test_size=10):
    return [TaskDataset(task.spec, task.train[:train_size], task.test[:test_size], task.seed)
            for task in gen_toy_benchmark(0)]


class ReservoirTests(unittest.TestCase):
    def test_fills_then_keeps_capacity(self):
        buffer = ReplayBuffer(3)
        rng = random.Random(0)
        for item in 'abc':
            reservoir_insert(buffer, item, rng)
        self.assertEqual(buffer.items, ['a', 'b', 'c'])
        for item in range(100):
            reservoir_insert(buffer, item, rng)
        self.assertEqual(len(buffer), 3)
        self.assertEqual(buffer.seen_count, 103)

    def test_inclusion_probability(self):
        capacity, stream, trials = 256, 10000, 200
        watched = (0, 5000, 9999)
        hits = dict.fromkeys(watched, 0)
        rng = random.Random(1)
        for _ in range(trials):
            buffer = ReplayBuffer(capacity)
            for item in range(stream):
                reservoir_insert(buffer, item, rng)
            kept = set(buffer.items)
            for item in watched:
                hits[item] += item in kept
        p = capacity / stream
        mean, sigma = trials * p, math.sqrt(trials * p * (1 - p))
        for item, count in hits.items():
            self.assertLessEqual(abs(count - mean), 3 * sigma, item)

    def test_sample_distinct(self):
        buffer = ReplayBuffer(10)
        rng = random.Random(2)
        for item in range(5):
            reservoir_insert(buffer, item, rng)
        drawn = buffer.sample(8, rng)
        self.assertEqual(sorted(drawn), [0, 1, 2, 3, 4])
        self.assertEqual(ReplayBuffer(4).sample(2, rng), [])
        self.assertEqual(ReplayBuffer.for_tasks(4).capacity, 256)


class MatrixTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_csv_layout(self):
        matrix = AccuracyMatrix(['task_1', 'task_2', 'task_3'])
        matrix.add_row(1, [0.5])
        matrix.add_row(2, [0.25, 1.0])
        path = os.path.join(self.tmp, 'matrix.csv')
        matrix.write_csv(path)
        with open(path) as f:
            self.assertEqual(f.read(), 'after_task,task_1,task_2,task_3\n1,0.5,,\n2,0.25,1.0,\n')
        self.assertEqual(AccuracyMatrix.read_csv(path), matrix)
        self.assertFalse(matrix.is_complete)

    def test_shape_checks(self):
        matrix = AccuracyMatrix(['a', 'b'])
        with self.assertRaises(MetricsException):
            matrix.add_row(2, [0.5])
        with self.assertRaises(MetricsException):
            matrix.add_row(3, [0.5, 0.5, 0.5])
        with self.assertRaises(MetricsException):
            matrix.add_row(1, [1.5])
        with self.assertRaises(MetricsException):
            matrix.value(1, 1)
        matrix.add_row(1, [1])
        with self.assertRaises(MetricsException):
            matrix.value(1, 2)

    def test_read_errors(self):
        path = os.path.join(self.tmp, 'bad.csv')
        with open(path, 'w') as f:
            f.write('after_task,a,b\n2,0.5,\n')
        with self.assertRaises(MetricsException):
            AccuracyMatrix.read_csv(path)
        with self.assertRaises(MetricsException):
            AccuracyMatrix.read_csv(os.path.join(self.tmp, 'missing.csv'))


class RunConfigTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_defaults(self):
        config = RunConfig()
        self.assertEqual((config.mode, config.strategy, config.epochs_per_task, config.batch_size),
                         ('tools', 'sequential', 3, 64))
        self.assertEqual(config.optim.peak_lr, 3e-4)
        self.assertEqual(config.model['d_model'], 128)

    def test_flat_and_nested(self):
        flat = RunConfig({'model.d_model': 64, 'optim.peak_lr': 1e-3})
        nested = RunConfig({'model': {'d_model': 64}, 'optim': {'peak_lr': 1e-3}})
        self.assertEqual(flat.to_flat(), nested.to_flat())

    def test_precedence(self):
        path = os.path.join(self.tmp, 'config.json')
        with open(path, 'w') as f:
            json.dump({'batch_size': 16, 'strategy': 'er'}, f)
        config = RunConfig.load(path)
        config.update({'strategy': 'mixed'})
        self.assertEqual((config.batch_size, config.strategy), (16, 'mixed'))

    def test_round_trip(self):
        config = RunConfig(dict(TINY, **{'tools.sentiment': 'tcp://127.0.0.1:7000'}))
        path = os.path.join(self.tmp, 'config.json')
        config.save(path)
        loaded = RunConfig.load(path)
        self.assertEqual(loaded.to_flat(), config.to_flat())
        self.assertEqual(loaded.tools, {'SENTIMENT': 'tcp://127.0.0.1:7000'})

    def test_invalid(self):
        for values in ({'epochs': 3}, {'model.width': 3}, {'strategy': 'ewc'}, {'mode': 'both'},
                       {'batch_size': 0}, {'optim.warmup_frac': 1.0}, {'tool_timeout': 0},
                       {'other.key': 1}):
            with self.assertRaises(ConfigException, msg=values):
                RunConfig(values)

    def test_model_config(self):
        config = RunConfig(TINY)
        self.assertEqual(config.model_config(99).context_len, 64)
        with self.assertRaises(ConfigException):
            RunConfig().model_config(99)
        self.assertEqual(RunConfig().resolve({'benchmark': 'cls', 'context_len': 256}).model_config(99)
                         .context_len, 256)
        with self.assertRaises(ConfigException):
            RunConfig({'model.n_heads': 3}).model_config(99, 64)

    def test_generation_budget_fits_targets(self):
        budget = required_new_tokens(gen_cls_benchmark(0))
        self.assertGreater(budget, RunConfig().max_new_tokens)
        self.assertEqual(RunConfig().resolve({'new_tokens': budget}).max_new_tokens, budget)
        explicit = RunConfig({'max_new_tokens': 200}).resolve({'new_tokens': budget})
        self.assertEqual(explicit.max_new_tokens, 200)
        self.assertEqual(RunConfig().resolve({}).max_new_tokens, 32)


class EvaluationTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        setup_logger(0)
        cls.tasks = tiny_tasks()
        cls.vocab = Vocabulary()

    def setUp(self):
        self.config = RunConfig(TINY)
        self.model_config = self.config.model_config(len(self.vocab))

    def _score(self, texts_for, run_config, registry=None, task=None, after_task=1):
        task = task or self.tasks[0]
        registry = registry or build_registry(self.tasks)

        def fake_generate(config, params, vocab, samples, max_new_tokens, batch_size):
            return [texts_for(s) for s in samples]

        with mock.patch('toolcl.cl.evaluation._generate', side_effect=fake_generate):
            return evaluate_task(self.model_config, None, self.vocab, task, run_config, registry,
                                 after_task, 0)

    def test_subset_is_seeded(self):
        task = self.tasks[0]
        a = eval_subset(task, 6, 0)
        self.assertEqual(a, eval_subset(task, 6, 0))
        self.assertEqual(len(a), 6)
        self.assertEqual(eval_subset(task, 0, 0), task.test)
        self.assertEqual(eval_subset(task, 100, 0), task.test)

    def test_perfect_calls(self):
        score = self._score(lambda s: s.api_call, self.config)
        self.assertEqual((score.accuracy, score.api_accuracy, score.count), (1.0, 1.0, 6))

    def test_equivalent_call_counts_for_accuracy_only(self):
        score = self._score(lambda s: s.api_call.lower().replace(', ', ','), self.config)
        self.assertEqual((score.accuracy, score.api_accuracy), (1.0, 0.0))

    def test_unparseable_and_missing(self):
        score = self._score(lambda s: None if '1' in s.query else 'ADD(', self.config)
        self.assertEqual(score.accuracy, 0.0)

    def test_raw_mode(self):
        raw = RunConfig(dict(TINY, mode='raw'))
        score = self._score(lambda s: s.raw_answer, raw)
        self.assertEqual(score.accuracy, 1.0)
        self.assertIsNone(score.api_accuracy)
        self.assertEqual(self._score(lambda s: s.api_call, raw).accuracy, 0.0)

    def test_imperfect_tool(self):
        tasks = gen_cls_benchmark(0, tool_accuracy=0.0)
        sst2 = TaskDataset(tasks[3].spec, [], tasks[3].test[:50], 0)
        config = RunConfig(dict(TINY, eval_subset_size=50))
        score = self._score(lambda s: s.api_call, config, build_registry(tasks), sst2)
        self.assertEqual(score.api_accuracy, 1.0)
        self.assertEqual(score.accuracy, 0.0)

    def test_stochastic_tool_rate(self):
        tasks = gen_cls_benchmark(0)
        registry = build_registry(tasks)
        config = RunConfig(dict(TINY, eval_subset_size=0))
        correct = count = 0
        for task in tasks:
            for after_task in range(1, 4):
                score = self._score(lambda s: s.api_call, config, registry, task, after_task)
                self.assertEqual(score.api_accuracy, 1.0)
                self.assertAlmostEqual(score.accuracy, 0.914, delta=0.02)
                correct += score.accuracy * score.count
                count += score.count
        self.assertEqual(count, 4 * 3 * 5000)
        self.assertAlmostEqual(correct / count, 0.914, delta=0.01)


class RecordingTrainer(ContinualTrainer):
    def __init__(self, *args, **kwargs):
        super(RecordingTrainer, self).__init__(*args, **kwargs)
        self.fits = []

    def fit(self, samples, name, replay=False):
        self.fits.append((name, len(samples), replay))
        return super(RecordingTrainer, self).fit(samples, name, replay)


class TrainerTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        setup_logger(0)
        cls.tasks = tiny_tasks()

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_sequential_matrix_shape(self):
        result = train_sequential(self.tasks, RunConfig(TINY), run_dir=self.tmp)
        self.assertTrue(result.matrix.is_complete)
        for tau in range(1, 5):
            self.assertEqual(len(result.matrix.row(tau)), tau)
            self.assertEqual(len(result.api_matrix.row(tau)), tau)
        self.assertEqual(len(result.checkpoints), 4)
        self.assertTrue(all(os.path.exists(p) for p in result.checkpoints))
        self.assertEqual(len(result.losses), 4)

    def test_deterministic(self):
        a = train_sequential(self.tasks, RunConfig(TINY), seed=3)
        b = train_sequential(self.tasks, RunConfig(TINY), seed=3)
        self.assertEqual(a.matrix, b.matrix)
        self.assertEqual(a.losses, b.losses)
        c = train_sequential(self.tasks, RunConfig(TINY), seed=4)
        self.assertNotEqual(a.losses, c.losses)

    def test_mixed_single_row(self):
        result = train_mixed(self.tasks, RunConfig(dict(TINY, strategy='mixed')))
        self.assertEqual(list(result.matrix.rows), [4])
        self.assertEqual(len(result.matrix.row(4)), 4)

    def test_replay_starts_with_second_task(self):
        trainer = RecordingTrainer(self.tasks, RunConfig(dict(TINY, strategy='er')))
        try:
            trainer.run()
        finally:
            trainer.close()
        self.assertEqual([replay for _, _, replay in trainer.fits], [False, True, True, True])
        self.assertEqual(trainer.replay.capacity, 64 * 4)
        self.assertEqual(trainer.replay.seen_count, 4 * 16)
        self.assertEqual(len(trainer.replay), 64)

    def test_mixed_trains_on_union(self):
        trainer = RecordingTrainer(self.tasks, RunConfig(dict(TINY, strategy='mixed')))
        try:
            trainer.run()
        finally:
            trainer.close()
        self.assertEqual(trainer.fits, [('mixed', 64, False)])

    def test_task_order(self):
        self.assertEqual(task_order(4, None), [0, 1, 2, 3])
        order = task_order(4, 7)
        self.assertEqual(sorted(order), [0, 1, 2, 3])
        self.assertEqual(order, task_order(4, 7))
        self.assertGreater(len(set(tuple(task_order(4, seed)) for seed in range(8))), 1)
        trainer = ContinualTrainer(self.tasks, RunConfig(dict(TINY, task_order_seed=7)))
        self.assertEqual([t.name for t in trainer.tasks], [self.tasks[i].name for i in order])
        self.assertEqual(trainer.matrix.task_labels, ['task_{}'.format(i + 1) for i in order])
        trainer.close()

    def test_strategy_mismatch(self):
        with self.assertRaises(TrainingException):
            train_er(self.tasks, RunConfig(TINY))

    def test_empty_train_set(self):
        tasks = list(self.tasks)
        tasks[1] = TaskDataset(tasks[1].spec, [], tasks[1].test, 0)
        with self.assertRaises(TrainingException):
            train_sequential(tasks, RunConfig(TINY))


if __name__ == '__main__':
    unittest.main()
