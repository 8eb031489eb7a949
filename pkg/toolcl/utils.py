import decimal
import math
import numbers

from toolcl.data.constants import DECIMAL_PLACES

_QUANTUM = decimal.Decimal(1).scaleb(-DECIMAL_PLACES)
_CONTEXT = decimal.Context(prec=60, rounding=decimal.ROUND_HALF_EVEN)


def to_decimal(value):
    """Convert an int, float, Decimal or numeric string to Decimal.
    Floats go through their shortest repr so that 0.1 stays 0.1.

    to_decimal(0.75)
    Decimal('0.75')
    """
    if isinstance(value, decimal.Decimal):
        return value
    if isinstance(value, bool):
        raise TypeError('Booleans are not numbers here')
    if isinstance(value, numbers.Integral):
        return decimal.Decimal(int(value))
    if isinstance(value, numbers.Real):
        if not math.isfinite(value):
            raise ValueError('Value should be finite, got {}'.format(value))
        return decimal.Decimal(repr(float(value)))
    if isinstance(value, str):
        return decimal.Decimal(value)
    raise TypeError('Cannot convert {} to a number'.format(type(value)))


def format_number(value):
    """Canonical text of a number: round half-to-even to four places,
    strip trailing zeros and a trailing point, never print '-0'.

    format_number(7.0)
    '7'
    format_number(1 / 3)
    '0.3333'
    """
    value = to_decimal(value)
    if not value.is_finite():
        raise ValueError('Value should be finite, got {}'.format(value))
    value = value.quantize(_QUANTUM, context=_CONTEXT)
    text = '{:f}'.format(value)
    if '.' in text:
        text = text.rstrip('0').rstrip('.')
    if text in ('-0', ''):
        text = '0'
    return text


def format_operand(value):
    """Canonical text of a call argument. Text operands are quoted,
    numbers use format_number."""
    if isinstance(value, str):
        return '"{}"'.format(value)
    return format_number(value)


def exact_divide(a, b):
    """Quotient of two numbers at the precision format_number needs."""
    return _CONTEXT.divide(to_decimal(a), to_decimal(b))


def derive_seed(*parts):
    """Mix integers into one reproducible 32 bit seed.

    derive_seed(0, 1) != derive_seed(1, 0)
    """
    seed = 0x345678
    for part in parts:
        seed = (seed * 1000003) ^ (int(part) & 0xffffffff)
        seed &= 0xffffffffffff
    return seed & 0xffffffff
