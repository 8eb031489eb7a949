"""Exact match evaluation of generated sequences on task test sets."""
import collections
import concurrent.futures
import logging
import random

from toolcl.exceptions import TokenizerException
from toolcl.model.transformer import generate_batch
from toolcl.tools.registry import default_registry, execute_text, exact_match
from toolcl.utils import derive_seed

__all__ = ['TaskScore',
           'build_registry',
           'eval_subset',
           'evaluate_task',
           'evaluate']

LOGGER = logging.getLogger(__name__)
_EVAL_SUBSET_STREAM = 101
_TOOL_RNG_STREAM = 202

TaskScore = collections.namedtuple('TaskScore', ['task_id', 'accuracy', 'api_accuracy', 'count'])


def build_registry(tasks, endpoints=None, timeout=5.0):
    """Tool registry for a benchmark: stochastic tools where a task
    records a tool accuracy, external tools where an endpoint is set."""
    registry = default_registry(timeout=timeout)
    for task in tasks:
        if task.spec.tool_accuracy is not None:
            registry.set_mode(task.spec.tool_name, 'stochastic', accuracy=task.spec.tool_accuracy,
                              endpoint=None)
    for name, endpoint in (endpoints or {}).items():
        entry = registry[name]
        registry.set_mode(entry.name, 'external', accuracy=entry.accuracy, endpoint=endpoint)
    return registry


def eval_subset(task, size, seed):
    """Seeded subset of a test set, identical for every evaluation of
    the task within a run. size 0 means the full test set."""
    if size == 0 or size >= len(task.test):
        return list(task.test)
    rng = random.Random(derive_seed(seed, task.test[0].task_id, _EVAL_SUBSET_STREAM))
    return [task.test[i] for i in sorted(rng.sample(range(len(task.test)), size))]


def _generate(config, params, vocab, samples, max_new_tokens, batch_size):
    texts = [None] * len(samples)
    prompts = []
    for i, sample in enumerate(samples):
        try:
            prompt = vocab.prompt(vocab.encode(sample.query))
        except TokenizerException as e:
            LOGGER.warning('Skipping sample with unencodable query: {}'.format(e))
            continue
        if len(prompt) >= config.context_len:
            continue
        prompts.append((i, prompt))
    for start in range(0, len(prompts), batch_size):
        chunk = prompts[start:start + batch_size]
        outputs = generate_batch(config, params, [p for _, p in chunk], max_new_tokens, vocab.eos_id,
                                 pad_id=vocab.pad_id, sep_id=vocab.sep_id)
        for (i, _), ids in zip(chunk, outputs):
            texts[i] = vocab.decode(ids)
    return texts


def evaluate_task(config, params, vocab, task, run_config, registry, after_task, seed):
    """Accuracy of one test set. Samples that cannot be generated, parsed
    or executed count as wrong."""
    samples = eval_subset(task, run_config.eval_subset_size, seed)
    if not samples:
        return TaskScore(None, 0.0, None, 0)
    task_id = samples[0].task_id
    texts = _generate(config, params, vocab, samples, run_config.max_new_tokens, run_config.eval_batch_size)
    rng = random.Random(derive_seed(seed, after_task, task_id, _TOOL_RNG_STREAM))
    correct = 0
    api_correct = 0
    for sample, text in zip(samples, texts):
        if run_config.mode == 'raw':
            ok = exact_match(text, sample.raw_answer)
        else:
            api_correct += exact_match(text, sample.api_call)
            if text is None:
                ok = False
            else:
                result = execute_text(text, registry, rng)
                ok = result.ok and exact_match(result.answer, sample.raw_answer)
        correct += ok
        LOGGER.trace('task {} query {!r} generated {!r} -> {}'.format(
            task_id, sample.query, text, 'ok' if ok else 'wrong'))
    accuracy = correct / len(samples)
    api_accuracy = api_correct / len(samples) if run_config.mode == 'tools' else None
    return TaskScore(task_id, accuracy, api_accuracy, len(samples))


def evaluate(config, params, vocab, tasks_seen, run_config, registry, after_task, seed):
    """Evaluate every task seen so far with frozen parameters. Returns
    the accuracy row and, in tools mode, the API call accuracy row."""
    jobs = [(task, after_task) for task in tasks_seen]
    if run_config.eval_workers > 1 and len(jobs) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=run_config.eval_workers) as pool:
            futures = [pool.submit(evaluate_task, config, params, vocab, task, run_config, registry,
                                   tau, seed) for task, tau in jobs]
            scores = [f.result() for f in futures]
    else:
        scores = [evaluate_task(config, params, vocab, task, run_config, registry, tau, seed)
                  for task, tau in jobs]
    row = [s.accuracy for s in scores]
    api_row = [s.api_accuracy for s in scores] if run_config.mode == 'tools' else None
    LOGGER.info('After task {}: accuracy {}{}'.format(
        after_task, ' '.join('{:.3f}'.format(v) for v in row),
        '' if api_row is None else ' | api ' + ' '.join('{:.3f}'.format(v) for v in api_row)))
    return row, api_row
