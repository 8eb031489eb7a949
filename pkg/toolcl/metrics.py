"""Continual learning metrics over an AccuracyMatrix. Task indices are
1-based positions in training order."""
import collections
import io
import json
import logging

import numpy as np

from toolcl.exceptions import MetricsException

__all__ = ['MetricsReport',
           'avg_accuracy',
           'forgetting_relative',
           'forgetting_relative_pairwise',
           'forgetting_absolute',
           'learning_accuracy',
           'compute_report',
           'write_metrics',
           'read_metrics']

LOGGER = logging.getLogger(__name__)
ORIENTATIONS = ('higher', 'lower')

MetricsReport = collections.namedtuple('MetricsReport', ['avg_accuracy', 'forgetting_relative',
                                                         'forgetting_absolute',
                                                         'forgetting_absolute_lower',
                                                         'learning_accuracy'])


def avg_accuracy(matrix, tau):
    """Mean of row tau."""
    return float(np.mean(matrix.row(tau)))


def _history(matrix, tau, k):
    """p[t, k] for k <= t < tau."""
    return [matrix.value(t, k) for t in range(k, tau)]


def _check_forgetting(tau):
    if tau < 2:
        raise MetricsException('Forgetting is defined from the second task on, got tau={}'.format(tau))


def forgetting_relative(matrix, tau):
    """Mean over past tasks of the drop from the best accuracy so far,
    relative to that best accuracy and clipped at 0. A task that never
    scored above 0 contributes 0.

    p[1,1]=0.85, p[2,1]=0.50 gives 0.35 / 0.85
    """
    _check_forgetting(tau)
    terms = []
    for k in range(1, tau):
        best = max(_history(matrix, tau, k))
        if best == 0:
            terms.append(0.0)
        else:
            terms.append(max((best - matrix.value(tau, k)) / best, 0.0))
    return float(np.mean(terms))


def forgetting_relative_pairwise(matrix, tau):
    """Same quantity computed as the largest relative drop against every
    earlier measurement individually."""
    _check_forgetting(tau)
    terms = []
    for k in range(1, tau):
        current = matrix.value(tau, k)
        drops = [(p - current) / p for p in _history(matrix, tau, k) if p > 0]
        terms.append(max(drops + [0.0]))
    return float(np.mean(terms))


def forgetting_absolute(matrix, tau, orientation='higher'):
    """Mean absolute drop. For higher-is-better scores the largest
    earlier value minus the current one, for lower-is-better scores the
    smallest current minus earlier difference."""
    _check_forgetting(tau)
    if orientation not in ORIENTATIONS:
        raise MetricsException('orientation should be higher or lower, got {!r}'.format(orientation))
    terms = []
    for k in range(1, tau):
        current = matrix.value(tau, k)
        history = _history(matrix, tau, k)
        if orientation == 'higher':
            terms.append(max(p - current for p in history))
        else:
            terms.append(min(current - p for p in history))
    return float(np.mean(terms))


def learning_accuracy(matrix, tau):
    """Mean of the diagonal p[k, k] for k <= tau."""
    return float(np.mean([matrix.value(k, k) for k in range(1, tau + 1)]))


def _defined(func, *args):
    try:
        return func(*args)
    except MetricsException:
        return None


def compute_report(matrix):
    """Every metric for every tau. Entries that need rows the matrix
    does not have (e.g. all but the last for the mixed baseline) are
    None."""
    taus = range(1, matrix.num_tasks + 1)
    avg = [_defined(avg_accuracy, matrix, tau) if matrix.has_row(tau) else None for tau in taus]
    relative, absolute, absolute_lower = [None], [None], [None]
    for tau in taus[1:]:
        relative.append(_defined(forgetting_relative, matrix, tau))
        absolute.append(_defined(forgetting_absolute, matrix, tau, 'higher'))
        absolute_lower.append(_defined(forgetting_absolute, matrix, tau, 'lower'))
    learning = [_defined(learning_accuracy, matrix, tau) for tau in taus]
    return MetricsReport(avg, relative, absolute, absolute_lower, learning)


def write_metrics(report, path):
    with io.open(path, 'w', encoding='utf-8') as f:
        json.dump(report._asdict(), f, indent=2)
        f.write('\n')


def read_metrics(path):
    try:
        with io.open(path, 'r', encoding='utf-8') as f:
            values = json.load(f)
        return MetricsReport(**values)
    except (OSError, ValueError, TypeError) as e:
        raise MetricsException('Cannot read metrics {}: {}'.format(path, e))
