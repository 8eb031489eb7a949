"""Exact executors for the arithmetic tools and the hidden labelling
rules of the synthetic classification tasks. Executors take parsed
arguments and return canonical answer text."""
import decimal
import math
import numbers

from toolcl.data.constants import CLS_WORDS, LP_MAX_OPERAND
from toolcl.exceptions import ToolDomainException
from toolcl.utils import format_number, to_decimal, exact_divide

__all__ = ['tool_add',
           'tool_sub',
           'tool_mult',
           'tool_div',
           'tool_gcd',
           'tool_lcm',
           'tool_lp',
           'prime_factors',
           'label_entailment',
           'label_paraphrase',
           'label_acceptable',
           'label_sentiment']


def _number(value, tool):
    if isinstance(value, str) or isinstance(value, bool) \
            or not isinstance(value, (numbers.Real, decimal.Decimal)):
        raise ToolDomainException('{} expects numbers, got {!r}'.format(tool, value))
    return to_decimal(value)


def _positive_int(value, tool):
    value = _number(value, tool)
    if value != value.to_integral_value():
        raise ToolDomainException('{} expects integers, got {}'.format(tool, value))
    value = int(value)
    if value < 1:
        raise ToolDomainException('{} expects positive integers, got {}'.format(tool, value))
    return value


def _text(value, tool):
    if not isinstance(value, str):
        raise ToolDomainException('{} expects quoted text, got {!r}'.format(tool, value))
    return value


def tool_add(a, b):
    return format_number(_number(a, 'ADD') + _number(b, 'ADD'))


def tool_sub(a, b):
    return format_number(_number(a, 'SUB') - _number(b, 'SUB'))


def tool_mult(a, b):
    return format_number(_number(a, 'MULT') * _number(b, 'MULT'))


def tool_div(a, b):
    b = _number(b, 'DIV')
    if b == 0:
        raise ToolDomainException('DIV by zero')
    return format_number(exact_divide(_number(a, 'DIV'), b))


def tool_gcd(a, b):
    return str(math.gcd(_positive_int(a, 'GCD'), _positive_int(b, 'GCD')))


def tool_lcm(a, b):
    a = _positive_int(a, 'LCM')
    b = _positive_int(b, 'LCM')
    return str(a * b // math.gcd(a, b))


def prime_factors(n):
    """Distinct prime factors of n in ascending order.

    prime_factors(360)
    [2, 3, 5]
    """
    factors = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            factors.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        factors.append(n)
    return factors


def tool_lp(a):
    a = _positive_int(a, 'LP')
    if a == 1:
        raise ToolDomainException('LP(1): 1 has no prime factors')
    if a > LP_MAX_OPERAND:
        raise ToolDomainException('LP operand {} exceeds {}'.format(a, LP_MAX_OPERAND))
    return ', '.join(str(p) for p in prime_factors(a))


def _words(sentence):
    return sentence.split()


def label_entailment(premise, hypothesis):
    """contradiction if the hypothesis negates, entailment if every
    hypothesis word occurs in the premise, neutral otherwise."""
    premise = _words(_text(premise, 'ENTAILMENT'))
    hypothesis = _words(_text(hypothesis, 'ENTAILMENT'))
    if 'not' in hypothesis:
        return 'contradiction'
    if set(hypothesis) <= set(premise):
        return 'entailment'
    return 'neutral'


def label_paraphrase(first, second):
    topics = set(CLS_WORDS['topics'])
    first = topics.intersection(_words(_text(first, 'PARAPHRASE')))
    second = topics.intersection(_words(_text(second, 'PARAPHRASE')))
    return 'yes' if first & second else 'no'


def label_acceptable(sentence):
    """A sentence is unacceptable when a word is directly repeated."""
    words = _words(_text(sentence, 'ACCEPTABLE'))
    for left, right in zip(words, words[1:]):
        if left == right:
            return 'no'
    return 'yes'


def label_sentiment(sentence):
    words = set(_words(_text(sentence, 'SENTIMENT')))
    if words.intersection(CLS_WORDS['positive']):
        return 'positive'
    return 'negative'


