"""Tool registry and call execution. Each registered tool has a
declared arity, argument kinds and a mode: oracle (exact), stochastic
(correct with probability q, otherwise a random wrong label) or
external (executed by a tool server over the wire protocol)."""
import collections
import logging
import threading

from toolcl.data.constants import TOOL_NAMES, CLASSIFICATION_LABELS, CLS_TASKS
from toolcl.exceptions import ToolException, UnknownToolException, ToolArityException, \
                              ToolDomainException, ToolParseException
from toolcl.tools.calls import parse_call, canonical_form
from toolcl.tools.protocol import ToolResult, ExternalToolClient
from toolcl.tools import oracles

__all__ = ['ToolEntry',
           'ToolRegistry',
           'default_registry',
           'execute',
           'execute_text',
           'exact_match',
           'MODES']

LOGGER = logging.getLogger(__name__)
MODES = ('oracle', 'stochastic', 'external')
NUMBER = 'number'
INTEGER = 'integer'
TEXT = 'text'

ToolEntry = collections.namedtuple(
    'ToolEntry', ['name', 'executor', 'arity', 'kinds', 'labels', 'mode', 'accuracy', 'endpoint'])


class ToolRegistry(object):
    """Maps upper-case tool names to executors. The registry is not
    modified after setup; stochastic tools draw from the rng handed
    to execute()."""
    def __init__(self, timeout=5.0):
        self.tools = collections.OrderedDict()
        self.timeout = timeout
        self.clients = {}
        self._lock = threading.Lock()

    def register(self, name, executor, kinds, labels=None, mode='oracle',
                 accuracy=1.0, endpoint=None):
        name = name.upper()
        if name in self.tools:
            raise ValueError('Tool {} is already registered'.format(name))
        self.tools[name] = self._entry(name, executor, kinds, labels, mode, accuracy, endpoint)
        return self.tools[name]

    def set_mode(self, name, mode, accuracy=1.0, endpoint=None):
        entry = self[name]
        self.tools[entry.name] = self._entry(entry.name, entry.executor, entry.kinds,
                                             entry.labels, mode, accuracy, endpoint)

    @staticmethod
    def _entry(name, executor, kinds, labels, mode, accuracy, endpoint):
        if mode not in MODES:
            raise ValueError('Unknown tool mode {}'.format(mode))
        if mode == 'stochastic':
            if not labels or len(labels) < 2:
                raise ValueError('Stochastic tool {} needs at least two labels'.format(name))
            if not 0.0 <= accuracy <= 1.0:
                raise ValueError('Tool accuracy should be in [0, 1], got {}'.format(accuracy))
        if mode == 'external' and not endpoint:
            raise ValueError('External tool {} needs an endpoint'.format(name))
        return ToolEntry(name, executor, len(kinds), tuple(kinds),
                         tuple(labels) if labels else None, mode, accuracy, endpoint)

    def __getitem__(self, name):
        try:
            return self.tools[name.upper()]
        except KeyError:
            raise UnknownToolException('Unknown tool {}'.format(name))

    def __contains__(self, name):
        return name.upper() in self.tools

    def client(self, endpoint):
        with self._lock:
            if endpoint not in self.clients:
                self.clients[endpoint] = ExternalToolClient(endpoint, timeout=self.timeout)
            return self.clients[endpoint]

    def close(self):
        for client in self.clients.values():
            client.close()
        self.clients.clear()


def default_registry(tool_accuracy=None, external=None, timeout=5.0):
    """Registry with every tool of the benchmarks. tool_accuracy turns
    the classification tools into stochastic experts, external maps
    tool names to endpoints of tool servers."""
    registry = ToolRegistry(timeout=timeout)
    registry.register(TOOL_NAMES['add'], oracles.tool_add, [NUMBER, NUMBER])
    registry.register(TOOL_NAMES['sub'], oracles.tool_sub, [NUMBER, NUMBER])
    registry.register(TOOL_NAMES['mult'], oracles.tool_mult, [NUMBER, NUMBER])
    registry.register(TOOL_NAMES['div'], oracles.tool_div, [NUMBER, NUMBER])
    registry.register(TOOL_NAMES['gcd'], oracles.tool_gcd, [INTEGER, INTEGER])
    registry.register(TOOL_NAMES['lcm'], oracles.tool_lcm, [INTEGER, INTEGER])
    registry.register(TOOL_NAMES['lp'], oracles.tool_lp, [INTEGER])
    classifiers = {'mnli': (oracles.label_entailment, [TEXT, TEXT]),
                   'qqp': (oracles.label_paraphrase, [TEXT, TEXT]),
                   'cola': (oracles.label_acceptable, [TEXT]),
                   'sst2': (oracles.label_sentiment, [TEXT])}
    for task in CLS_TASKS:
        executor, kinds = classifiers[task]
        if tool_accuracy is None:
            registry.register(TOOL_NAMES[task], executor, kinds, labels=CLASSIFICATION_LABELS[task])
        else:
            registry.register(TOOL_NAMES[task], executor, kinds, labels=CLASSIFICATION_LABELS[task],
                              mode='stochastic', accuracy=tool_accuracy)
    for name, endpoint in (external or {}).items():
        entry = registry[name]
        registry.set_mode(entry.name, 'external', accuracy=entry.accuracy, endpoint=endpoint)
    return registry


def execute(call, registry, rng=None):
    """Execute a parsed call. Failures never raise, they are reported
    as ToolResult with the error kind."""
    try:
        entry = registry[call.name]
        if len(call.args) != entry.arity:
            raise ToolArityException('{} takes {} argument(s), got {}'.format(
                entry.name, entry.arity, len(call.args)))
        if entry.mode == 'external':
            return registry.client(entry.endpoint).call(canonical_form(call))
        answer = entry.executor(*call.args)
        if entry.mode == 'stochastic' and rng is not None and rng.random() >= entry.accuracy:
            answer = rng.choice([label for label in entry.labels if label != answer])
        return ToolResult.success(answer)
    except ToolException as e:
        return ToolResult.from_exception(e)
    except (ArithmeticError, OverflowError, ValueError) as e:
        return ToolResult.from_exception(ToolDomainException(str(e)))


def execute_text(text, registry, rng=None):
    """Parse and execute generated text in one go."""
    try:
        call = parse_call(text)
    except ToolParseException as e:
        return ToolResult.from_exception(e)
    return execute(call, registry, rng)


def exact_match(predicted, gold):
    """Strict string equality after trimming surrounding whitespace.

    exact_match(' 42', '42')
    True
    """
    if predicted is None or gold is None:
        return False
    return predicted.strip() == gold.strip()
