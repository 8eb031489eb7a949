"""Desk-scale experiments on the toy and classification benchmarks.
They take tens of minutes on a CPU and only run with TOOLCL_SLOW_TESTS
set."""
import os
import unittest

import numpy as np

from toolcl.cl import RunConfig, train_sequential, train_er, train_mixed
from toolcl.metrics import compute_report
from toolcl.misc import setup_logger
from toolcl.tasks import (gen_toy_benchmark, gen_cls_benchmark, required_context_len,
                          required_new_tokens)

SLOW = bool(os.environ.get('TOOLCL_SLOW_TESTS'))
SEEDS = (0, 1, 2)


def run_config(strategy, tasks, **values):
    values.update({'strategy': strategy, 'model.context_len': required_context_len(tasks),
                   'max_new_tokens': max(32, required_new_tokens(tasks)), 'eval_workers': 4})
    return RunConfig(values)


@unittest.skipUnless(SLOW, 'set TOOLCL_SLOW_TESTS=1 to run the desk-scale experiments')
class ToyTrendTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        setup_logger(1)
        cls.tasks = gen_toy_benchmark(0)

    def _reports(self, trainer, strategy):
        return [compute_report(trainer(self.tasks, run_config(strategy, self.tasks), seed=seed).matrix)
                for seed in SEEDS]

    def test_replay_prevents_forgetting(self):
        reports = self._reports(train_er, 'er')
        self.assertGreaterEqual(np.mean([r.avg_accuracy[-1] for r in reports]), 0.95)
        self.assertLessEqual(np.mean([r.forgetting_relative[-1] for r in reports]), 0.05)
        self.assertGreaterEqual(np.mean([r.learning_accuracy[-1] for r in reports]), 0.95)

    def test_mixed_baseline(self):
        reports = self._reports(train_mixed, 'mixed')
        self.assertGreaterEqual(np.mean([r.avg_accuracy[-1] for r in reports]), 0.95)

    def test_sequential_forgets(self):
        reports = self._reports(train_sequential, 'sequential')
        self.assertGreaterEqual(np.mean([r.forgetting_relative[-1] for r in reports]), 0.70)
        self.assertGreaterEqual(np.mean([r.learning_accuracy[-1] for r in reports]), 0.95)


@unittest.skipUnless(SLOW, 'set TOOLCL_SLOW_TESTS=1 to run the desk-scale experiments')
class ImperfectToolTrendTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        setup_logger(1)
        cls.tasks = gen_cls_benchmark(0, tool_accuracy=0.914)

    def test_answers_capped_by_tool_accuracy(self):
        result = train_er(self.tasks, run_config('er', self.tasks), seed=0)
        answers = compute_report(result.matrix)
        calls = compute_report(result.api_matrix)
        self.assertGreaterEqual(calls.avg_accuracy[-1], 0.95)
        self.assertGreaterEqual(answers.avg_accuracy[-1], 0.88)
        self.assertLessEqual(answers.avg_accuracy[-1], 0.94)


if __name__ == '__main__':
    unittest.main()
