"""Reference tool server for the wire protocol. It answers requests
either by echoing the call (protocol testing) or by executing it on
the oracle registry, on standard streams or on a TCP socket."""
import asyncio
import logging
import random
import sys

from toolcl.tools.protocol import encode_message, decode_message
from toolcl.tools.registry import default_registry, execute_text

__all__ = ['EchoHandler',
           'OracleHandler',
           'ToolServerProtocol',
           'serve_stdio',
           'serve_tcp']

LOGGER = logging.getLogger(__name__)


class EchoHandler(object):
    def __call__(self, call_text):
        return True, call_text


class OracleHandler(object):
    def __init__(self, registry=None, seed=0):
        self.registry = registry or default_registry()
        self.rng = random.Random(seed)

    def __call__(self, call_text):
        result = execute_text(call_text, self.registry, self.rng)
        if result.ok:
            return True, result.answer
        return False, '{}: {}'.format(result.error, result.message)


def handle_line(line, handler):
    """Turn one request line into a response message. Malformed
    requests get an ok=false response instead of ending the server."""
    message = decode_message(line)
    if message is None:
        return {'id': None, 'ok': False, 'error': 'malformed request: not a JSON object'}
    request_id = message.get('id')
    call_text = message.get('call')
    if not isinstance(request_id, int) or isinstance(request_id, bool):
        return {'id': request_id, 'ok': False, 'error': 'malformed request: id should be an integer'}
    if not isinstance(call_text, str):
        return {'id': request_id, 'ok': False, 'error': 'malformed request: call should be a string'}
    ok, value = handler(call_text)
    if ok:
        return {'id': request_id, 'ok': True, 'answer': value}
    return {'id': request_id, 'ok': False, 'error': value}


class ToolServerProtocol(asyncio.Protocol):
    """Serves newline-delimited requests. Responses go to the
    transport, or to the write callable when reading from a pipe."""
    def __init__(self, handler, write=None, on_close=None):
        self.handler = handler
        self.write = write
        self.on_close = on_close
        self.transport = None
        self.buffer = b''

    def connection_made(self, transport):
        self.transport = transport
        if self.write is None:
            self.write = transport.write

    def data_received(self, data):
        self.buffer += data
        while b'\n' in self.buffer:
            line, self.buffer = self.buffer.split(b'\n', 1)
            if not line.strip():
                continue
            LOGGER.trace_incoming(line)
            response = handle_line(line, self.handler)
            LOGGER.trace_outgoing(response)
            self.write(encode_message(response))

    def eof_received(self):
        if self.buffer.strip():
            self.data_received(b'\n')
        return False

    def connection_lost(self, exc):
        if self.on_close is not None:
            self.on_close()


def serve_stdio(handler, loop=None):
    """Serve on standard input/output until the input is closed."""
    loop = loop or asyncio.new_event_loop()
    done = loop.create_future()
    stdout = sys.stdout.buffer

    def write(data):
        stdout.write(data)
        stdout.flush()

    def closed():
        if not done.done():
            done.set_result(None)

    try:
        try:
            loop.run_until_complete(loop.connect_read_pipe(
                lambda: ToolServerProtocol(handler, write=write, on_close=closed), sys.stdin))
        except ValueError:
            # stdin is a regular file, asyncio only reads pipes
            protocol = ToolServerProtocol(handler, write=write)
            for line in sys.stdin.buffer:
                protocol.data_received(line)
            protocol.eof_received()
            return
        loop.run_until_complete(done)
    finally:
        loop.close()


def serve_tcp(handler, host='127.0.0.1', port=0, loop=None, ready=None):
    """Serve on a TCP socket until interrupted. ready, if given, is
    called with the bound (host, port)."""
    loop = loop or asyncio.new_event_loop()
    server = loop.run_until_complete(loop.create_server(
        lambda: ToolServerProtocol(handler), host, port))
    sockname = server.sockets[0].getsockname()
    LOGGER.info('Tool server listening on {}:{}'.format(sockname[0], sockname[1]))
    if ready is not None:
        ready(sockname)
    try:
        loop.run_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
        loop.run_until_complete(server.wait_closed())
        loop.close()
