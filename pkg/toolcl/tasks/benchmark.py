"""Benchmark level plumbing: generation by name, the manifest that
lists task order, specs and seeds, and loading a benchmark back."""
import collections
import io
import json
import logging
import os

from toolcl.data.constants import BENCHMARKS, DEFAULT_CONTEXT_LEN, DEFAULT_TOOL_ACCURACY
from toolcl.exceptions import DatasetException
from toolcl.tasks.core import TaskSpec, TaskDataset, write_jsonl, read_jsonl
from toolcl.tasks.arithmetic import gen_toy_benchmark, gen_advanced_benchmark
from toolcl.tasks.classification import gen_cls_benchmark

__all__ = ['generate_benchmark',
           'write_benchmark',
           'load_benchmark',
           'required_context_len',
           'required_new_tokens',
           'MANIFEST_NAME']

LOGGER = logging.getLogger(__name__)
MANIFEST_NAME = 'manifest.json'


def generate_benchmark(name, seed, tool_accuracy=DEFAULT_TOOL_ACCURACY):
    if name == 'toy':
        return gen_toy_benchmark(seed)
    elif name == 'advanced':
        return gen_advanced_benchmark(seed)
    elif name == 'cls':
        return gen_cls_benchmark(seed, tool_accuracy)
    raise DatasetException('Unknown benchmark {}, choose from {}'.format(name, ', '.join(BENCHMARKS)))


def required_context_len(tasks, minimum=DEFAULT_CONTEXT_LEN):
    """Smallest power of two (at least minimum) that holds
    BOS + query + SEP + target + EOS for every sample in either mode."""
    longest = 0
    for task in tasks:
        for sample in task.train + task.test:
            target = max(len(sample.api_call), len(sample.raw_answer))
            longest = max(longest, len(sample.query) + target + 3)
    context_len = minimum
    while context_len < longest:
        context_len *= 2
    return context_len


def required_new_tokens(tasks):
    """Generation budget that fits the longest target of either mode
    plus EOS."""
    longest = 0
    for task in tasks:
        for sample in task.train + task.test:
            longest = max(longest, len(sample.api_call), len(sample.raw_answer))
    return longest + 1


def write_benchmark(tasks, out_dir, benchmark, seed):
    """Write train/test JSONL files per task plus the manifest and
    return the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = collections.OrderedDict()
    manifest['benchmark'] = benchmark
    manifest['seed'] = seed
    manifest['context_len'] = required_context_len(tasks)
    manifest['new_tokens'] = required_new_tokens(tasks)
    manifest['tasks'] = []
    for task_id, task in enumerate(tasks, 1):
        entry = task.spec.to_dict()
        entry['task_id'] = task_id
        for split in ('train', 'test'):
            filename = '{}.{}.jsonl'.format(task.name, split)
            write_jsonl(os.path.join(out_dir, filename), getattr(task, split))
            entry[split] = filename
            entry['{}_size'.format(split)] = len(getattr(task, split))
        manifest['tasks'].append(entry)
    path = os.path.join(out_dir, MANIFEST_NAME)
    with io.open(path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2)
        f.write('\n')
    LOGGER.info('Wrote {} task(s) of benchmark {} to {}'.format(len(tasks), benchmark, out_dir))
    return path


def load_benchmark(manifest_path):
    """Load a manifest (or the directory holding it). Returns the
    manifest dict and the list of TaskDataset in benchmark order."""
    if os.path.isdir(manifest_path):
        manifest_path = os.path.join(manifest_path, MANIFEST_NAME)
    try:
        with io.open(manifest_path, 'r', encoding='utf-8') as f:
            manifest = json.load(f)
    except (OSError, ValueError) as e:
        raise DatasetException('Cannot read manifest {}: {}'.format(manifest_path, e))
    base = os.path.dirname(os.path.abspath(manifest_path))
    tasks = []
    for entry in manifest.get('tasks', []):
        spec = TaskSpec.from_dict(entry)
        train = read_jsonl(os.path.join(base, entry['train']))
        test = read_jsonl(os.path.join(base, entry['test']))
        tasks.append(TaskDataset(spec, train, test, manifest.get('seed')))
    if not tasks:
        raise DatasetException('Manifest {} lists no tasks'.format(manifest_path))
    return manifest, tasks
