"""The accuracy matrix p[tau, k]: accuracy on the k-th task seen,
measured after training through the tau-th task. Both indices are
1-based positions in training order."""
import collections
import csv
import io
import logging

from toolcl.exceptions import MetricsException

__all__ = ['AccuracyMatrix']

LOGGER = logging.getLogger(__name__)


class AccuracyMatrix(object):
    """Lower triangular: row tau holds exactly tau entries. A run may
    record only some rows, e.g. the mixed baseline only row T."""
    def __init__(self, task_labels):
        if not task_labels:
            raise MetricsException('An accuracy matrix needs at least one task')
        self.task_labels = list(task_labels)
        self.rows = collections.OrderedDict()

    @property
    def num_tasks(self):
        return len(self.task_labels)

    def add_row(self, after_task, values):
        values = [float(v) for v in values]
        if not 1 <= after_task <= self.num_tasks:
            raise MetricsException('Row {} is outside 1..{}'.format(after_task, self.num_tasks))
        if len(values) != after_task:
            raise MetricsException('Row {} should hold {} entries, got {}'.format(
                after_task, after_task, len(values)))
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise MetricsException('Accuracies should be in [0, 1], got {}'.format(values))
        self.rows[after_task] = values

    def has_row(self, tau):
        return tau in self.rows

    def row(self, tau):
        try:
            return self.rows[tau]
        except KeyError:
            raise MetricsException('Accuracy matrix has no row {}'.format(tau))

    def value(self, tau, k):
        row = self.row(tau)
        if not 1 <= k <= len(row):
            raise MetricsException('Row {} has no entry for task {}'.format(tau, k))
        return row[k - 1]

    @property
    def is_complete(self):
        return all(self.has_row(tau) for tau in range(1, self.num_tasks + 1))

    def __eq__(self, other):
        return (isinstance(other, AccuracyMatrix) and self.task_labels == other.task_labels
                and self.rows == other.rows)

    def __repr__(self):
        return 'AccuracyMatrix(tasks={}, rows={})'.format(self.num_tasks, list(self.rows))

    def write_csv(self, path):
        """Header after_task,<labels...>; row tau lists p[tau, 1..tau]
        followed by empty cells."""
        with io.open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['after_task'] + self.task_labels)
            for tau, values in self.rows.items():
                cells = [repr(v) for v in values]
                writer.writerow([tau] + cells + [''] * (self.num_tasks - len(cells)))

    @classmethod
    def read_csv(cls, path):
        try:
            with io.open(path, 'r', encoding='utf-8', newline='') as f:
                lines = list(csv.reader(f))
        except OSError as e:
            raise MetricsException('Cannot read accuracy matrix {}: {}'.format(path, e))
        if not lines or not lines[0] or lines[0][0] != 'after_task':
            raise MetricsException('{} is not an accuracy matrix'.format(path))
        matrix = cls(lines[0][1:])
        for lineno, line in enumerate(lines[1:], 2):
            if not line:
                continue
            try:
                tau = int(line[0])
                matrix.add_row(tau, [float(cell) for cell in line[1:tau + 1]])
            except (ValueError, IndexError) as e:
                raise MetricsException('{}:{}: {}'.format(path, lineno, e))
        return matrix
