"""Generators of the Toy and Advanced Arithmetic benchmarks."""
import decimal
import logging
import random

from toolcl.data.constants import TOOL_NAMES, ARITHMETIC_TEMPLATES, TOY_TASKS, ADVANCED_TASKS, \
                                  BENCHMARK_SIZES, OPERAND_DECIMALS
from toolcl.tasks.core import Sample, TaskSpec, TaskDataset, render_template, split_samples
from toolcl.tools.calls import ToolCall, canonical_form
from toolcl.tools.registry import default_registry, execute
from toolcl.utils import derive_seed

__all__ = ['gen_toy_benchmark',
           'gen_advanced_benchmark',
           'make_sample',
           'TOY_DOMAIN',
           'ADVANCED_DOMAINS']

LOGGER = logging.getLogger(__name__)

TOY_DOMAIN = [{'kind': 'integer', 'low': 0, 'high': 99}] * 2
_DECIMAL = {'kind': 'decimal', 'low': '0', 'high': '99.99', 'places': OPERAND_DECIMALS}
_SMALL_INT = {'kind': 'integer', 'low': 1, 'high': 999}
ADVANCED_DOMAINS = {
    'add': [_DECIMAL, _DECIMAL],
    'sub': [_DECIMAL, _DECIMAL],
    'mult': [_DECIMAL, _DECIMAL],
    'div': [_DECIMAL, _DECIMAL],
    'gcd': [_SMALL_INT, _SMALL_INT],
    'lcm': [_SMALL_INT, _SMALL_INT],
    # [1, 999] holds too few unique (template, operand) pairs for 20000 samples
    'lp': [{'kind': 'integer', 'low': 2, 'high': 99999}]}

_ORACLES = default_registry()


def make_sample(spec, task_id, template_id, operands):
    """Build one sample. The raw answer is computed by executing the
    gold call on the oracle registry."""
    call = ToolCall(spec.tool_name, operands)
    result = execute(call, _ORACLES)
    if not result.ok:
        raise ValueError('Oracle rejected {}: {}'.format(canonical_form(call), result.message))
    return Sample(task_id, template_id,
                  render_template(spec.templates[template_id], operands),
                  result.answer,
                  canonical_form(call))


def gen_toy_benchmark(seed):
    """Four tasks enumerating every operand pair of 0..99 with a single
    template. Division maps a zero divisor to one."""
    tasks = []
    for task_id, name in enumerate(TOY_TASKS, 1):
        spec = TaskSpec(name, TOOL_NAMES[name], ARITHMETIC_TEMPLATES[name][:1], TOY_DOMAIN, 2)
        samples = []
        for a in range(100):
            for b in range(100):
                if name == 'div' and b == 0:
                    b = 1
                samples.append(make_sample(spec, task_id, 0, (a, b)))
        train, test = split_samples(samples, random.Random(derive_seed(seed, task_id)))
        LOGGER.debug('Generated toy task {}: {} train, {} test'.format(name, len(train), len(test)))
        tasks.append(TaskDataset(spec, train, test, seed))
    return tasks


def _draw(domain, rng):
    if domain['kind'] == 'integer':
        return rng.randint(domain['low'], domain['high'])
    scale = 10 ** domain['places']
    low = int(decimal.Decimal(domain['low']) * scale)
    high = int(decimal.Decimal(domain['high']) * scale)
    return decimal.Decimal(rng.randint(low, high)).scaleb(-domain['places'])


def gen_advanced_benchmark(seed):
    """Seven tasks using every template in turn. Operands are drawn at
    random, duplicates by (template, operands) and zero divisors are
    rejected and drawn again."""
    train_size, test_size = BENCHMARK_SIZES['advanced']
    total = train_size + test_size
    tasks = []
    for task_id, name in enumerate(ADVANCED_TASKS, 1):
        domains = ADVANCED_DOMAINS[name]
        spec = TaskSpec(name, TOOL_NAMES[name], ARITHMETIC_TEMPLATES[name], domains, len(domains))
        rng = random.Random(derive_seed(seed, task_id, 1))
        seen = set()
        samples = []
        rejected = 0
        while len(samples) < total:
            template_id = len(samples) % len(spec.templates)
            operands = tuple(_draw(domain, rng) for domain in domains)
            key = (template_id, operands)
            if key in seen or (name == 'div' and operands[1] == 0):
                rejected += 1
                continue
            seen.add(key)
            samples.append(make_sample(spec, task_id, template_id, operands))
        train, test = split_samples(samples, rng, train_size=train_size)
        LOGGER.debug('Generated advanced task {}: {} samples, {} draws rejected'.format(
            name, len(samples), rejected))
        tasks.append(TaskDataset(spec, train, test, seed))
    return tasks
