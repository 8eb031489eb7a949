"""Client side of the external tool wire protocol: newline-delimited
JSON over a byte stream, either the standard streams of a spawned
tool process or a TCP socket.

    request:  {"id": <int>, "call": "<canonical call>"}
    response: {"id": <int>, "ok": true, "answer": "<text>"}
              {"id": <int>, "ok": false, "error": "<text>"}

Responses may arrive out of order, they are matched by id."""
import asyncio
import json
import logging
import shlex
import threading

from toolcl.exceptions import ToolProtocolException
from toolcl.tools.calls import ToolCall, canonical_form

__all__ = ['ToolResult',
           'ToolClientProtocol',
           'ExternalToolClient',
           'external_tool_call',
           'encode_message',
           'decode_message',
           'parse_endpoint']

LOGGER = logging.getLogger(__name__)


class ToolResult(object):
    """Outcome of executing one call: either a canonical answer or an
    error kind (ParseError, UnknownTool, ArityError, DomainError,
    ProtocolError) with a message."""
    def __init__(self, ok, answer=None, error=None, message=None):
        if ok != (answer is not None):
            raise ValueError('A successful result needs an answer, a failed one none')
        self.ok = ok
        self.answer = answer
        self.error = error
        self.message = message

    @classmethod
    def success(cls, answer):
        return cls(True, answer=answer)

    @classmethod
    def failure(cls, error, message=None):
        return cls(False, error=error, message=message)

    @classmethod
    def from_exception(cls, exception):
        return cls.failure(exception.kind, exception.message)

    def __eq__(self, other):
        if not isinstance(other, ToolResult):
            return NotImplemented
        return (self.ok, self.answer, self.error) == (other.ok, other.answer, other.error)

    def __repr__(self):
        if self.ok:
            return 'ToolResult(ok, answer={!r})'.format(self.answer)
        return 'ToolResult({}, message={!r})'.format(self.error, self.message)


def encode_message(message):
    return (json.dumps(message, separators=(', ', ': ')) + '\n').encode('utf-8')


def decode_message(line):
    """Decode one protocol line, returns None for anything that is not
    a JSON object."""
    try:
        message = json.loads(line.decode('utf-8') if isinstance(line, bytes) else line)
    except (UnicodeDecodeError, ValueError):
        return None
    if not isinstance(message, dict):
        return None
    return message


def parse_endpoint(endpoint):
    """Split an endpoint definition into its transport and target.

    parse_endpoint('tcp://127.0.0.1:7000')
    ('tcp', ('127.0.0.1', 7000))
    parse_endpoint('exec:toolcl toolserve --oracle')
    ('exec', ['toolcl', 'toolserve', '--oracle'])
    """
    if endpoint.startswith('tcp://'):
        host, _, port = endpoint[len('tcp://'):].rpartition(':')
        try:
            return 'tcp', (host or '127.0.0.1', int(port))
        except ValueError:
            raise ToolProtocolException('Invalid TCP endpoint: {}'.format(endpoint))
    if endpoint.startswith('exec:'):
        command = shlex.split(endpoint[len('exec:'):])
        if not command:
            raise ToolProtocolException('Empty command in endpoint: {}'.format(endpoint))
        return 'exec', command
    raise ToolProtocolException('Unknown endpoint type: {}'.format(endpoint))


class ToolClientProtocol(asyncio.Protocol, asyncio.SubprocessProtocol):
    """Protocol implementation for talking to a tool server. Works as
    stream protocol for TCP and as subprocess protocol for spawned
    servers. Every pending request owns a future in response_futures."""
    def __init__(self, loop=None):
        self.loop = loop or asyncio.get_event_loop()
        self.transport = None
        self.buffer = b''
        self.response_futures = {}
        self.closed = False

    def connection_made(self, transport):
        self.transport = transport

    def data_received(self, data):
        self.feed(data)

    def pipe_data_received(self, fd, data):
        if fd == 1:
            self.feed(data)
        else:
            LOGGER.debug('Tool server stderr: {}'.format(data.decode('utf-8', errors='replace').rstrip()))

    def feed(self, data):
        self.buffer += data
        while b'\n' in self.buffer:
            line, self.buffer = self.buffer.split(b'\n', 1)
            if not line.strip():
                continue
            LOGGER.trace_incoming(line)
            message = decode_message(line)
            if message is None:
                LOGGER.warning('Ignoring malformed response line: {!r}'.format(line[:80]))
                continue
            future = self.response_futures.pop(message.get('id'), None)
            if future is None:
                LOGGER.debug('Response for unknown request id {!r}'.format(message.get('id')))
            elif not future.done():
                future.set_result(message)

    def connection_lost(self, exc):
        self._fail_pending('connection lost' if exc is None else 'connection lost: {}'.format(exc))

    def process_exited(self):
        self._fail_pending('tool process exited')

    def _fail_pending(self, reason):
        self.closed = True
        for future in self.response_futures.values():
            if not future.done():
                future.set_exception(ToolProtocolException(reason))
        self.response_futures.clear()

    def send_request(self, request_id, call_text):
        if self.closed or self.transport is None:
            raise ToolProtocolException('connection is closed')
        future = self.loop.create_future()
        self.response_futures[request_id] = future
        message = {'id': request_id, 'call': call_text}
        LOGGER.trace_outgoing(message)
        data = encode_message(message)
        if isinstance(self.transport, asyncio.SubprocessTransport):
            self.transport.get_pipe_transport(0).write(data)
        else:
            self.transport.write(data)
        return future


class ExternalToolClient(object):
    """Blocking facade over ToolClientProtocol. The client owns a private
    event loop; call() blocks until the matching response arrived or the
    timeout expired, call_many() pipelines a batch of calls."""
    def __init__(self, endpoint, timeout=5.0, loop=None):
        self.endpoint = endpoint
        self.kind, self.target = parse_endpoint(endpoint)
        self.timeout = timeout
        self.loop = loop or asyncio.new_event_loop()
        self.transport = None
        self.protocol = None
        self.request_id = 0
        self._lock = threading.Lock()

    async def connect(self):
        factory = lambda: ToolClientProtocol(loop=self.loop)
        try:
            if self.kind == 'tcp':
                coro = self.loop.create_connection(factory, *self.target)
            else:
                coro = self.loop.subprocess_exec(factory, *self.target)
            self.transport, self.protocol = await asyncio.wait_for(coro, self.timeout)
        except asyncio.TimeoutError:
            raise ToolProtocolException('timeout connecting to {}'.format(self.endpoint))
        except OSError as e:
            raise ToolProtocolException('cannot reach {}: {}'.format(self.endpoint, e))
        LOGGER.debug('Connected to tool endpoint {}'.format(self.endpoint))

    async def request(self, call):
        if isinstance(call, ToolCall):
            call = canonical_form(call)
        if self.protocol is None or self.protocol.closed:
            await self.connect()
        self.request_id += 1
        future = self.protocol.send_request(self.request_id, call)
        try:
            message = await asyncio.wait_for(future, self.timeout)
        except asyncio.TimeoutError:
            self.protocol.response_futures.pop(self.request_id, None)
            raise ToolProtocolException('timeout waiting for {}'.format(self.endpoint))
        if message.get('ok') is True and isinstance(message.get('answer'), str):
            return ToolResult.success(message['answer'])
        if message.get('ok') is False:
            return ToolResult.failure('ProtocolError', str(message.get('error', '')))
        raise ToolProtocolException('malformed response: {!r}'.format(message))

    async def _request_safe(self, call):
        try:
            return await self.request(call)
        except ToolProtocolException as e:
            return ToolResult.from_exception(e)

    def call(self, call):
        with self._lock:
            return self.loop.run_until_complete(self._request_safe(call))

    def call_many(self, calls):
        async def pipelined():
            if self.protocol is None or self.protocol.closed:
                try:
                    await self.connect()
                except ToolProtocolException as e:
                    return [ToolResult.from_exception(e) for _ in calls]
            return await asyncio.gather(*[self._request_safe(c) for c in calls])
        with self._lock:
            return self.loop.run_until_complete(pipelined())

    def close(self):
        with self._lock:
            if self.transport is not None:
                self.transport.close()
                self.transport = None
            if not self.loop.is_closed():
                # let the transports finish closing
                self.loop.run_until_complete(asyncio.sleep(0))
                self.loop.close()


def external_tool_call(endpoint, call, timeout=5.0):
    """Execute a single call on an external tool server and return the
    ToolResult; connection problems become ProtocolError results."""
    client = ExternalToolClient(endpoint, timeout=timeout)
    try:
        return client.call(call)
    finally:
        client.close()
