"""Helpers around experiment runs: seed list expansion, run directory
handling, the training driver that writes a run's artifacts, and the
aggregation of finished runs into report CSVs."""
import collections
import csv
import io
import json
import logging
import math
import os

import numpy as np

from toolcl.cl.config import RunConfig
from toolcl.cl.matrix import AccuracyMatrix
from toolcl.cl.trainer import train_sequential, train_er, train_mixed
from toolcl.data.constants import OUTPUT_ROOT_ENV
from toolcl.exceptions import ConfigException, ReportException, MetricsException
from toolcl.metrics import compute_report, write_metrics
from toolcl.misc import add_file_handler, remove_file_handler
from toolcl.tasks.benchmark import load_benchmark
from toolcl.tokenizer import Vocabulary

__all__ = ['SeedList',
           'output_root',
           'prepare_run_dir',
           'train_run',
           'run_experiment',
           'RunRecord',
           'load_run',
           'aggregate_runs',
           'summarize',
           'write_report',
           'print_summary']

LOGGER = logging.getLogger(__name__)
CONFIG_NAME = 'config.json'
MATRIX_NAME = 'matrix.csv'
API_MATRIX_NAME = 'api_matrix.csv'
METRICS_NAME = 'metrics.json'
LOG_NAME = 'train.log'
VOCAB_NAME = 'vocab.json'
DEFAULT_OUTPUT_ROOT = 'runs'
_TRAINERS = {'sequential': train_sequential, 'er': train_er, 'mixed': train_mixed}
_REPORT_METRICS = ('avg_accuracy', 'forgetting_relative', 'forgetting_absolute',
                   'learning_accuracy', 'api_avg_accuracy')


class SeedList(object):
    """Expands seed definitions like '3', '0-2' or '0,3,5' (and mixes
    like '0-2,7') to a sorted list of distinct seeds."""
    def __init__(self, seeds):
        self.seeds = []
        if isinstance(seeds, int):
            self.seeds = [seeds]
        elif isinstance(seeds, (list, tuple, set)):
            self.seeds = sorted(set(int(s) for s in seeds))
        else:
            self._parse(str(seeds))
        if any(s < 0 for s in self.seeds):
            raise ConfigException('Seeds should not be negative: {}'.format(seeds))

    def _parse(self, definition):
        seeds = set()
        for part in definition.split(','):
            part = part.strip()
            try:
                if '-' in part:
                    f, t = part.split('-')
                    f, t = int(f), int(t)
                    if t < f:
                        raise ConfigException('From should not be larger than To in seed range {}'.format(part))
                    seeds.update(range(f, t + 1))
                else:
                    seeds.add(int(part))
            except ValueError:
                raise ConfigException('Invalid seed definition: {}'.format(part))
        self.seeds = sorted(seeds)

    def __iter__(self):
        return iter(self.seeds)

    def __len__(self):
        return len(self.seeds)

    def __repr__(self):
        return 'SeedList({})'.format(self.seeds)


def output_root():
    return os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT


def prepare_run_dir(path, force=False):
    """Create a run directory. An existing non-empty directory is only
    reused with force."""
    if os.path.isdir(path) and os.listdir(path) and not force:
        raise ConfigException('Run directory {} already exists, use --force to overwrite it'.format(path))
    os.makedirs(path, exist_ok=True)
    return path


def train_run(tasks, run_config, run_dir):
    """Train one seed and write config.json, vocab.json, matrix.csv, api_matrix.csv
    (tools mode), metrics.json, checkpoints and train.log."""
    handler = add_file_handler(os.path.join(run_dir, LOG_NAME))
    try:
        run_config.save(os.path.join(run_dir, CONFIG_NAME))
        Vocabulary().save(os.path.join(run_dir, VOCAB_NAME))
        LOGGER.info('Starting run {} in {}'.format(run_config, run_dir))
        result = _TRAINERS[run_config.strategy](tasks, run_config, seed=run_config.seed, run_dir=run_dir)
        result.matrix.write_csv(os.path.join(run_dir, MATRIX_NAME))
        if result.api_matrix is not None:
            result.api_matrix.write_csv(os.path.join(run_dir, API_MATRIX_NAME))
        write_metrics(compute_report(result.matrix), os.path.join(run_dir, METRICS_NAME))
        LOGGER.info('Finished run in {}'.format(run_dir))
        return result
    finally:
        remove_file_handler(handler)


def run_experiment(manifest_path, run_config, seeds, out_dir=None, force=False):
    """Train every seed of a seed list. A single seed writes directly to
    out_dir, several seeds write to out_dir/seed_<n>. Without an explicit
    task_order_seed each seed also draws its own task order. Returns the list
    of run directories."""
    manifest, tasks = load_benchmark(manifest_path)
    run_config.resolve(manifest)
    seeds = SeedList(seeds)
    if not len(seeds):
        raise ConfigException('No seeds to run')
    if out_dir is None:
        out_dir = os.path.join(output_root(), '{}-{}-{}'.format(
            run_config.benchmark, run_config.mode, run_config.strategy))
    run_dirs = []
    for seed in seeds:
        seed_config = RunConfig(run_config.to_flat())
        seed_config.seed = seed
        if seed_config.task_order_seed is None:
            seed_config.task_order_seed = seed
        run_dir = out_dir if len(seeds) == 1 else os.path.join(out_dir, 'seed_{}'.format(seed))
        prepare_run_dir(run_dir, force)
        train_run(tasks, seed_config, run_dir)
        run_dirs.append(run_dir)
    return run_dirs


class RunRecord(object):
    def __init__(self, path, config, matrix, api_matrix=None):
        self.path = path
        self.config = config
        self.matrix = matrix
        self.api_matrix = api_matrix
        self.report = compute_report(matrix)
        self.api_report = compute_report(api_matrix) if api_matrix is not None else None

    @property
    def key(self):
        return (self.config.get('benchmark'), self.config.get('mode'), self.config.get('strategy'))

    @property
    def seed(self):
        return self.config.get('seed')

    def __repr__(self):
        return self.path


def load_run(run_dir):
    matrix_path = os.path.join(run_dir, MATRIX_NAME)
    if not os.path.isfile(matrix_path):
        raise ReportException('{} has no {}'.format(run_dir, MATRIX_NAME))
    try:
        with io.open(os.path.join(run_dir, CONFIG_NAME), 'r', encoding='utf-8') as f:
            config = json.load(f)
    except (OSError, ValueError):
        config = {}
    api_path = os.path.join(run_dir, API_MATRIX_NAME)
    try:
        matrix = AccuracyMatrix.read_csv(matrix_path)
        api_matrix = AccuracyMatrix.read_csv(api_path) if os.path.isfile(api_path) else None
    except MetricsException as e:
        raise ReportException(str(e))
    return RunRecord(run_dir, config, matrix, api_matrix)


def _expand_run_dirs(paths):
    """A directory holding seed_<n> sub directories stands for all of them."""
    expanded = []
    for path in paths:
        subdirs = sorted(os.path.join(path, d) for d in os.listdir(path)
                         if d.startswith('seed_') and os.path.isdir(os.path.join(path, d))) \
            if os.path.isdir(path) else []
        if subdirs and not os.path.isfile(os.path.join(path, MATRIX_NAME)):
            expanded.extend(subdirs)
        else:
            expanded.append(path)
    return expanded


def aggregate_runs(run_dirs):
    """Load finished runs. All of them have to exist and agree on the
    number of tasks."""
    run_dirs = _expand_run_dirs(run_dirs)
    records, missing = [], []
    for run_dir in run_dirs:
        try:
            records.append(load_run(run_dir))
        except ReportException as e:
            LOGGER.error(e.message)
            missing.append(run_dir)
    if missing:
        raise ReportException('Missing or unreadable accuracy matrices in: {}'.format(', '.join(missing)))
    if not records:
        raise ReportException('No runs to report on')
    sizes = set(r.matrix.num_tasks for r in records)
    if len(sizes) > 1:
        raise ReportException('Runs differ in their number of tasks: {}'.format(
            ', '.join('{} ({})'.format(r.path, r.matrix.num_tasks) for r in records)))
    return records


def _metric_rows(record):
    rows = []
    report = record.report
    for tau in range(1, record.matrix.num_tasks + 1):
        if report.avg_accuracy[tau - 1] is None:
            continue
        row = collections.OrderedDict()
        row['run'] = record.path
        row['benchmark'], row['mode'], row['strategy'] = record.key
        row['seed'] = record.seed
        row['tau'] = tau
        row['avg_accuracy'] = report.avg_accuracy[tau - 1]
        row['forgetting_relative'] = report.forgetting_relative[tau - 1]
        row['forgetting_absolute'] = report.forgetting_absolute[tau - 1]
        row['learning_accuracy'] = report.learning_accuracy[tau - 1]
        row['api_avg_accuracy'] = record.api_report.avg_accuracy[tau - 1] if record.api_report else None
        rows.append(row)
    return rows


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return '{:.6f}'.format(value)
    return value


def _write_csv(path, header, rows):
    with io.open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row[h]) for h in header])
    LOGGER.debug('Wrote {} ({} rows)'.format(path, len(rows)))


def summarize(metric_rows):
    """Mean and standard error over seeds per benchmark, mode, strategy
    and tau."""
    groups = collections.OrderedDict()
    for row in metric_rows:
        key = (row['benchmark'], row['mode'], row['strategy'], row['tau'])
        groups.setdefault(key, []).append(row)
    summary = []
    for (benchmark, mode, strategy, tau), rows in groups.items():
        out = collections.OrderedDict([('benchmark', benchmark), ('mode', mode), ('strategy', strategy),
                                       ('tau', tau), ('n', len(rows))])
        for metric in _REPORT_METRICS:
            values = np.array([r[metric] for r in rows if r[metric] is not None], dtype=np.float64)
            if not len(values):
                out[metric + '_mean'] = out[metric + '_stderr'] = None
                continue
            out[metric + '_mean'] = float(values.mean())
            out[metric + '_stderr'] = float(values.std(ddof=1) / math.sqrt(len(values))) \
                if len(values) > 1 else 0.0
        summary.append(out)
    return summary


def write_report(records, out_dir):
    """Write report.csv, summary.csv and the long format figure CSVs.
    Returns the summary rows."""
    os.makedirs(out_dir, exist_ok=True)
    metric_rows = [row for record in records for row in _metric_rows(record)]
    _write_csv(os.path.join(out_dir, 'report.csv'),
               ['run', 'benchmark', 'mode', 'strategy', 'seed', 'tau'] + list(_REPORT_METRICS), metric_rows)
    summary = summarize(metric_rows)
    header = ['benchmark', 'mode', 'strategy', 'tau', 'n']
    for metric in _REPORT_METRICS:
        header += [metric + '_mean', metric + '_stderr']
    _write_csv(os.path.join(out_dir, 'summary.csv'), header, summary)
    accuracy_rows = []
    for record in records:
        benchmark, mode, strategy = record.key
        for tau, values in record.matrix.rows.items():
            for k, value in enumerate(values):
                accuracy_rows.append(collections.OrderedDict([
                    ('run', record.path), ('benchmark', benchmark), ('mode', mode),
                    ('strategy', strategy), ('seed', record.seed), ('after_task', tau),
                    ('task', record.matrix.task_labels[k]), ('accuracy', value)]))
    _write_csv(os.path.join(out_dir, 'figure_accuracy.csv'),
               ['run', 'benchmark', 'mode', 'strategy', 'seed', 'after_task', 'task', 'accuracy'],
               accuracy_rows)
    for name, metric in (('figure_forgetting.csv', 'forgetting_relative'),
                         ('figure_learning_accuracy.csv', 'learning_accuracy')):
        rows = [r for r in metric_rows if r[metric] is not None]
        _write_csv(os.path.join(out_dir, name),
                   ['run', 'benchmark', 'mode', 'strategy', 'seed', 'tau', metric], rows)
    LOGGER.info('Wrote report of {} run(s) to {}'.format(len(records), out_dir))
    return summary


def print_summary(summary):
    """Print summary rows in a readable, indented layout."""
    def fmt(row, metric):
        mean = row[metric + '_mean']
        if mean is None:
            return '-'
        return '{:.4f} +/- {:.4f}'.format(mean, row[metric + '_stderr'])

    current = None
    print()
    for row in summary:
        key = (row['benchmark'], row['mode'], row['strategy'])
        if key != current:
            current = key
            print('{} / {} / {} ({} run(s))'.format(key[0], key[1], key[2], row['n']))
        print('   after task {}'.format(row['tau']))
        for metric in _REPORT_METRICS:
            if row[metric + '_mean'] is not None:
                print('      {}: {}'.format(metric, fmt(row, metric)))
    print()
