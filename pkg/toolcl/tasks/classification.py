"""Synthetic stand-in for the GLUE tasks. Sentences come from a small
grammar and a hidden keyword rule decides the gold label; the tools
that answer these tasks are imperfect experts."""
import logging
import random

from toolcl.data.constants import TOOL_NAMES, CLASSIFICATION_TEMPLATES, CLASSIFICATION_LABELS, \
                                  CLS_TASKS, CLS_WORDS, BENCHMARK_SIZES, DEFAULT_TOOL_ACCURACY
from toolcl.exceptions import DatasetException
from toolcl.tasks.core import Sample, TaskSpec, TaskDataset, render_template, split_samples
from toolcl.tools.calls import ToolCall, canonical_form
from toolcl.tools import oracles
from toolcl.utils import derive_seed

__all__ = ['gen_cls_benchmark',
           'SENTENCE_GENERATORS',
           'LABEL_RULES']

LOGGER = logging.getLogger(__name__)


def _mnli(label, rng):
    noun = rng.choice(CLS_WORDS['nouns'])
    verb = rng.choice(CLS_WORDS['verbs'])
    place, other_place = rng.sample(CLS_WORDS['places'], 2)
    premise = 'a {} is {} {}'.format(noun, verb, place)
    if label == 'entailment':
        hypothesis = 'a {} is {}'.format(noun, verb)
    elif label == 'contradiction':
        hypothesis = 'a {} is not {}'.format(noun, verb)
    else:
        hypothesis = 'a {} is {} {}'.format(noun, verb, other_place)
    return premise, hypothesis


def _qqp(label, rng):
    first_frame, second_frame = rng.sample(CLS_WORDS['question_frames'], 2)
    topic, other_topic = rng.sample(CLS_WORDS['topics'], 2)
    second_topic = topic if label == 'yes' else other_topic
    return first_frame.replace('$t$', topic), second_frame.replace('$t$', second_topic)


def _cola(label, rng):
    words = ['the', rng.choice(CLS_WORDS['nouns']), rng.choice(CLS_WORDS['cola_verbs'])]
    words.extend(rng.choice(CLS_WORDS['cola_objects']).split())
    if label == 'no':
        position = rng.randrange(len(words))
        words.insert(position, words[position])
    return (' '.join(words),)


def _sst2(label, rng):
    subject = rng.choice(CLS_WORDS['subjects'])
    word = rng.choice(CLS_WORDS['positive' if label == 'positive' else 'negative'])
    frame = rng.choice(['{} was {}', '{} felt {}', '{} seemed {}'])
    return (frame.format(subject, word),)


SENTENCE_GENERATORS = {'mnli': _mnli, 'qqp': _qqp, 'cola': _cola, 'sst2': _sst2}
LABEL_RULES = {'mnli': oracles.label_entailment,
               'qqp': oracles.label_paraphrase,
               'cola': oracles.label_acceptable,
               'sst2': oracles.label_sentiment}


def gen_cls_benchmark(seed, tool_accuracy=DEFAULT_TOOL_ACCURACY):
    """Four classification tasks mirroring MNLI, QQP, CoLA and SST-2.
    Labels are exactly balanced before the split, tool_accuracy is
    recorded in every spec for the tool runtime."""
    if not 0.0 <= tool_accuracy <= 1.0:
        raise DatasetException('tool_accuracy should be in [0, 1], got {}'.format(tool_accuracy))
    train_size, test_size = BENCHMARK_SIZES['cls']
    tasks = []
    for task_id, name in enumerate(CLS_TASKS, 1):
        labels = CLASSIFICATION_LABELS[name]
        arity = 2 if name in ('mnli', 'qqp') else 1
        domain = [{'kind': 'text', 'grammar': name}] * arity
        spec = TaskSpec(name, TOOL_NAMES[name], CLASSIFICATION_TEMPLATES[name], domain, arity,
                        labels=labels, tool_accuracy=tool_accuracy)
        rng = random.Random(derive_seed(seed, task_id, 2))
        samples = []
        for i in range(train_size + test_size):
            label = labels[i % len(labels)]
            sentences = SENTENCE_GENERATORS[name](label, rng)
            if LABEL_RULES[name](*sentences) != label:
                raise DatasetException('Grammar produced {!r} for label {}'.format(sentences, label))
            template_id = rng.randrange(len(spec.templates))
            samples.append(Sample(task_id, template_id,
                                  render_template(spec.templates[template_id], sentences),
                                  label,
                                  canonical_form(ToolCall(spec.tool_name, sentences))))
        train, test = split_samples(samples, rng, train_size=train_size)
        LOGGER.debug('Generated classification task {}: {} train, {} test'.format(
            name, len(train), len(test)))
        tasks.append(TaskDataset(spec, train, test, seed))
    return tasks
