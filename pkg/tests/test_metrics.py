import os
import random
import shutil
import tempfile
import unittest

from toolcl.cl import AccuracyMatrix
from toolcl.exceptions import MetricsException
from toolcl.metrics import (avg_accuracy, forgetting_relative, forgetting_relative_pairwise,
                            forgetting_absolute, learning_accuracy, compute_report, write_metrics,
                            read_metrics)


def matrix_from_rows(rows):
    matrix = AccuracyMatrix(['task_{}'.format(i + 1) for i in range(len(rows))])
    for tau, row in enumerate(rows, 1):
        matrix.add_row(tau, row)
    return matrix


def random_matrix(rng, num_tasks):
    return matrix_from_rows([[rng.choice((0.0, rng.random())) for _ in range(tau)]
                             for tau in range(1, num_tasks + 1)])


class AverageAccuracyTests(unittest.TestCase):
    def test_rows(self):
        matrix = matrix_from_rows([[1.0], [0.5, 0.7], [0.2, 0.4, 0.6], [0.25, 0.25, 0.25, 0.25]])
        self.assertEqual(avg_accuracy(matrix, 1), 1.0)
        self.assertAlmostEqual(avg_accuracy(matrix, 2), 0.6)
        self.assertAlmostEqual(avg_accuracy(matrix, 4), 0.25)

    def test_missing_row(self):
        matrix = AccuracyMatrix(['a', 'b'])
        matrix.add_row(1, [0.5])
        with self.assertRaises(MetricsException):
            avg_accuracy(matrix, 2)


class ForgettingTests(unittest.TestCase):
    def test_single_drop(self):
        matrix = matrix_from_rows([[0.85], [0.50, 0.9]])
        self.assertAlmostEqual(forgetting_relative(matrix, 2), 0.35 / 0.85)
        self.assertAlmostEqual(forgetting_relative(matrix, 2), 0.411765, places=6)
        self.assertAlmostEqual(forgetting_absolute(matrix, 2), 0.35)

    def test_peak_relative_terms(self):
        matrix = matrix_from_rows([[0.80], [0.70, 0.30], [0.60, 0.27, 0.5]])
        self.assertAlmostEqual(forgetting_relative(matrix, 3), (0.25 + 0.10) / 2)

    def test_absolute_mean_of_drops(self):
        matrix = matrix_from_rows([[0.9], [0.8, 0.7], [0.8, 0.4, 0.5]])
        self.assertAlmostEqual(forgetting_absolute(matrix, 3), (0.1 + 0.3) / 2)
        self.assertAlmostEqual(forgetting_absolute(matrix, 3, 'lower'), (-0.1 - 0.3) / 2)

    def test_improvement_is_clipped(self):
        matrix = matrix_from_rows([[0.2], [0.5, 0.3], [0.9, 0.6, 0.1]])
        self.assertEqual(forgetting_relative(matrix, 2), 0.0)
        self.assertEqual(forgetting_relative(matrix, 3), 0.0)
        self.assertEqual(forgetting_relative_pairwise(matrix, 3), 0.0)

    def test_never_learned_task(self):
        matrix = matrix_from_rows([[0.0], [0.0, 1.0]])
        self.assertEqual(forgetting_relative(matrix, 2), 0.0)
        self.assertEqual(forgetting_relative_pairwise(matrix, 2), 0.0)

    def test_constant_matrix(self):
        matrix = matrix_from_rows([[0.4], [0.4, 0.4], [0.4, 0.4, 0.4]])
        self.assertEqual(forgetting_absolute(matrix, 3), 0.0)
        self.assertEqual(forgetting_absolute(matrix, 3, 'lower'), 0.0)
        self.assertEqual(forgetting_relative(matrix, 3), 0.0)

    def test_undefined_for_first_task(self):
        matrix = matrix_from_rows([[0.5]])
        for func in (forgetting_relative, forgetting_relative_pairwise, forgetting_absolute):
            with self.assertRaises(MetricsException):
                func(matrix, 1)
        with self.assertRaises(MetricsException):
            forgetting_absolute(matrix_from_rows([[0.5], [0.5, 0.5]]), 2, 'sideways')

    def test_pairwise_form_agrees(self):
        rng = random.Random(0)
        for _ in range(1000):
            num_tasks = rng.randint(2, 6)
            matrix = random_matrix(rng, num_tasks)
            for tau in range(2, num_tasks + 1):
                a = forgetting_relative(matrix, tau)
                self.assertAlmostEqual(a, forgetting_relative_pairwise(matrix, tau), delta=1e-12)
                self.assertTrue(0.0 <= a <= 1.0)

    def test_non_decreasing_columns(self):
        rng = random.Random(1)
        rows = []
        for tau in range(1, 6):
            previous = rows[-1] if rows else []
            rows.append([min(1.0, p + rng.random() * 0.1) for p in previous] + [rng.random()])
        matrix = matrix_from_rows(rows)
        for tau in range(2, 6):
            self.assertEqual(forgetting_relative(matrix, tau), 0.0)


class LearningAccuracyTests(unittest.TestCase):
    def test_diagonal(self):
        matrix = matrix_from_rows([[1.0], [0.2, 0.8], [0.1, 0.3, 0.6]])
        self.assertAlmostEqual(learning_accuracy(matrix, 3), 0.8)
        self.assertEqual(learning_accuracy(matrix, 1), 1.0)
        self.assertAlmostEqual(learning_accuracy(matrix, 2), 0.9)

    def test_permutation_covariance(self):
        rows = [[0.9], [0.4, 0.7], [0.3, 0.5, 0.8]]
        matrix = matrix_from_rows(rows)
        diagonal = [rows[k][k] for k in range(3)]
        self.assertAlmostEqual(learning_accuracy(matrix, 3), sum(reversed(diagonal)) / 3)
        self.assertAlmostEqual(avg_accuracy(matrix, 3), sum(reversed(rows[2])) / 3)


class ReportTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_full_matrix(self):
        report = compute_report(matrix_from_rows([[0.85], [0.50, 0.9]]))
        self.assertEqual(report.avg_accuracy, [0.85, 0.7])
        self.assertIsNone(report.forgetting_relative[0])
        self.assertAlmostEqual(report.forgetting_relative[1], 0.35 / 0.85)
        self.assertAlmostEqual(report.forgetting_absolute[1], 0.35)
        self.assertAlmostEqual(report.forgetting_absolute_lower[1], -0.35)
        self.assertAlmostEqual(report.learning_accuracy[1], 0.875)

    def test_last_row_only(self):
        matrix = AccuracyMatrix(['a', 'b', 'c'])
        matrix.add_row(3, [0.5, 0.6, 0.7])
        report = compute_report(matrix)
        self.assertEqual(report.avg_accuracy[:2], [None, None])
        self.assertAlmostEqual(report.avg_accuracy[2], 0.6)
        self.assertEqual(report.forgetting_relative, [None, None, None])
        self.assertEqual(report.learning_accuracy, [None, None, None])

    def test_json_round_trip(self):
        report = compute_report(matrix_from_rows([[0.85], [0.50, 0.9]]))
        path = os.path.join(self.tmp, 'metrics.json')
        write_metrics(report, path)
        self.assertEqual(read_metrics(path), report)
        with open(path, 'w') as f:
            f.write('{"avg_accuracy": []}')
        with self.assertRaises(MetricsException):
            read_metrics(path)


if __name__ == '__main__':
    unittest.main()
