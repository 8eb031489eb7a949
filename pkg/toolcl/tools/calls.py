"""Grammar of generated API calls:

    call := WS* NAME "(" arg ("," WS* arg)* ")" WS*
    arg  := NUMBER | '"' TEXT '"'

Names are case-insensitive and normalized to upper case, numbers
become int or Decimal, quoted text is kept verbatim without quotes."""
import collections
import decimal
import re

from toolcl.exceptions import ToolParseException
from toolcl.utils import format_operand

__all__ = ['ToolCall',
           'parse_call',
           'canonical_form',
           'MAX_CALL_LENGTH']

MAX_CALL_LENGTH = 1024

_NAME_RE = re.compile(r'[A-Za-z][A-Za-z0-9_]*')
_NUMBER_RE = re.compile(r'-?[0-9]+(\.[0-9]+)?')
_TEXT_RE = re.compile(r'"([^"\n]*)"')
_WS_RE = re.compile(r'[ \t]*')


class ToolCall(collections.namedtuple('ToolCall', ['name', 'args'])):
    """A parsed API call: upper-case function name and the ordered
    tuple of its arguments."""
    __slots__ = ()

    def __new__(cls, name, args):
        return super(ToolCall, cls).__new__(cls, name.upper(), tuple(args))

    def __str__(self):
        return canonical_form(self)


def canonical_form(call):
    """Render a ToolCall in the gold surface form.

    canonical_form(ToolCall('add', [23, 35]))
    'ADD(23, 35)'
    """
    return '{}({})'.format(call.name, ', '.join(format_operand(a) for a in call.args))


def _skip_ws(text, pos):
    return _WS_RE.match(text, pos).end()


def _parse_arg(text, pos):
    if pos >= len(text):
        raise ToolParseException('Unexpected end of input, expected an argument', pos)
    if text[pos] == '"':
        m = _TEXT_RE.match(text, pos)
        if not m:
            raise ToolParseException('Unterminated quoted argument', pos)
        return m.group(1), m.end()
    m = _NUMBER_RE.match(text, pos)
    if not m:
        raise ToolParseException('Expected a number or a quoted argument', pos)
    literal = m.group(0)
    if m.group(1):
        value = decimal.Decimal(literal)
    else:
        value = int(literal)
    return value, m.end()


def parse_call(text):
    """Parse generated text into a ToolCall. Any deviation from the
    grammar raises ToolParseException with the offending offset.

    parse_call('div(81, 2)')
    ToolCall(name='DIV', args=(81, 2))
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode('ascii')
        except UnicodeDecodeError as e:
            raise ToolParseException('Non-ASCII byte in call', e.start)
    if not isinstance(text, str):
        raise ToolParseException('Call should be text, got {}'.format(type(text).__name__), 0)
    if len(text) > MAX_CALL_LENGTH:
        raise ToolParseException('Call longer than {} characters'.format(MAX_CALL_LENGTH),
                                 MAX_CALL_LENGTH)
    for offset, char in enumerate(text):
        if ord(char) > 127:
            raise ToolParseException('Non-ASCII character {!r}'.format(char), offset)
    pos = _skip_ws(text, 0)
    m = _NAME_RE.match(text, pos)
    if not m:
        raise ToolParseException('Expected a function name', pos)
    name = m.group(0)
    pos = m.end()
    if pos >= len(text) or text[pos] != '(':
        raise ToolParseException('Expected "(" after function name', pos)
    pos += 1
    args = []
    value, pos = _parse_arg(text, pos)
    args.append(value)
    while pos < len(text) and text[pos] == ',':
        pos = _skip_ws(text, pos + 1)
        value, pos = _parse_arg(text, pos)
        args.append(value)
    if pos >= len(text) or text[pos] != ')':
        raise ToolParseException('Expected "," or ")"', pos)
    pos = _skip_ws(text, pos + 1)
    if pos != len(text):
        raise ToolParseException('Trailing characters after call', pos)
    return ToolCall(name, args)
