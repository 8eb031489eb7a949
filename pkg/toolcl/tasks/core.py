"""Benchmark data types, template rendering, splitting and the JSONL
dataset format."""
import collections
import io
import json
import logging
import re

from toolcl.data.constants import TRAIN_FRACTION
from toolcl.exceptions import DatasetException, TemplateException
from toolcl.utils import format_number

__all__ = ['Sample',
           'TaskSpec',
           'TaskDataset',
           'render_template',
           'placeholders',
           'split_samples',
           'write_jsonl',
           'read_jsonl',
           'SAMPLE_FIELDS']

LOGGER = logging.getLogger(__name__)
SAMPLE_FIELDS = ('task_id', 'template_id', 'query', 'raw_answer', 'api_call')
_PLACEHOLDER_RE = re.compile(r'\$([a-z])\$')

# One benchmark example: query (s_q), raw answer (s_G), API call (s_A).
Sample = collections.namedtuple('Sample', SAMPLE_FIELDS)


def placeholders(template):
    """Distinct placeholder names of a template in alphabetical order.

    placeholders('What is $b$ less than $a$?')
    ['a', 'b']
    """
    return sorted(set(_PLACEHOLDER_RE.findall(template)))


def _render_operand(value):
    if isinstance(value, str):
        return value
    return format_number(value)


def render_template(template, operands):
    """Fill the placeholders of a template. $a$ receives the first
    operand, $b$ the second, numbers are canonically formatted.

    render_template('What is $a$ plus $b$?', [23, 35])
    'What is 23 plus 35?'
    """
    names = placeholders(template)
    if len(names) != len(operands):
        raise TemplateException('Template {!r} has {} placeholder(s), got {} operand(s)'.format(
            template, len(names), len(operands)))
    values = dict(zip(names, (_render_operand(o) for o in operands)))
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)


class TaskSpec(object):
    """A tool task: its templates, the tool it is solved with and the
    domain its operands are drawn from."""
    def __init__(self, name, tool_name, templates, operand_domain, arity,
                 labels=None, tool_accuracy=None):
        if not templates:
            raise DatasetException('Task {} has no templates'.format(name))
        if arity not in (1, 2):
            raise DatasetException('Task {} has arity {}, expected 1 or 2'.format(name, arity))
        for template in templates:
            if len(placeholders(template)) != arity:
                raise DatasetException('Template {!r} of task {} does not have {} placeholder(s)'.format(
                    template, name, arity))
        self.name = name
        self.tool_name = tool_name
        self.templates = list(templates)
        self.operand_domain = operand_domain
        self.arity = arity
        self.labels = list(labels) if labels else None
        self.tool_accuracy = tool_accuracy

    def to_dict(self):
        d = collections.OrderedDict()
        d['name'] = self.name
        d['tool_name'] = self.tool_name
        d['templates'] = self.templates
        d['operand_domain'] = self.operand_domain
        d['arity'] = self.arity
        if self.labels:
            d['labels'] = self.labels
        if self.tool_accuracy is not None:
            d['tool_accuracy'] = self.tool_accuracy
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d['name'], d['tool_name'], d['templates'], d['operand_domain'],
                       d['arity'], labels=d.get('labels'), tool_accuracy=d.get('tool_accuracy'))
        except KeyError as e:
            raise DatasetException('Task spec misses field {}'.format(e))

    def __repr__(self):
        return 'TaskSpec({}, tool={}, templates={})'.format(self.name, self.tool_name, len(self.templates))


class TaskDataset(object):
    def __init__(self, spec, train, test, seed):
        self.spec = spec
        self.train = list(train)
        self.test = list(test)
        self.seed = seed

    @property
    def name(self):
        return self.spec.name

    def __len__(self):
        return len(self.train) + len(self.test)

    def __repr__(self):
        return 'TaskDataset({}, train={}, test={})'.format(self.spec.name, len(self.train), len(self.test))


def split_samples(samples, rng, train_size=None):
    """Shuffle with rng and cut into train and test. Without train_size
    the cut is at 80%."""
    samples = list(samples)
    rng.shuffle(samples)
    if train_size is None:
        train_size = int(round(len(samples) * TRAIN_FRACTION))
    return samples[:train_size], samples[train_size:]


def _sample_to_json(sample):
    return json.dumps(collections.OrderedDict(zip(SAMPLE_FIELDS, sample)), ensure_ascii=False)


def write_jsonl(path, samples):
    with io.open(path, 'w', encoding='utf-8', newline='\n') as f:
        for sample in samples:
            f.write(_sample_to_json(sample))
            f.write('\n')


def read_jsonl(path):
    samples = []
    with io.open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except ValueError as e:
                raise DatasetException('{}:{}: invalid JSON ({})'.format(path, lineno, e))
            if not isinstance(record, dict):
                raise DatasetException('{}:{}: expected a JSON object'.format(path, lineno))
            missing = [field for field in SAMPLE_FIELDS if field not in record]
            if missing:
                raise DatasetException('{}:{}: missing field(s) {}'.format(path, lineno, ', '.join(missing)))
            task_id, template_id = record['task_id'], record['template_id']
            if not isinstance(task_id, int) or not isinstance(template_id, int):
                raise DatasetException('{}:{}: task_id and template_id should be integers'.format(path, lineno))
            texts = [record[field] for field in SAMPLE_FIELDS[2:]]
            if not all(isinstance(text, str) for text in texts):
                raise DatasetException('{}:{}: query, raw_answer and api_call should be strings'.format(
                    path, lineno))
            samples.append(Sample(task_id, template_id, *texts))
    return samples
