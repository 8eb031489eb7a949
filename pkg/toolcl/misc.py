import json
import logging

LOGGER = logging.getLogger(__name__)
TRACE_LOG_LEVEL = 9
LOG_FORMAT_VERBOSE = '[%(filename)s:%(lineno)s - %(funcName)20s() ] %(message)s'


def trace_incoming(self, message, direction='IN'):
    return trace_message(self, message, direction=direction)


def trace_outgoing(self, message, direction='OUT'):
    return trace_message(self, message, direction=direction)


def trace_message(self, message, *args, **kwargs):
    """A simple tracing function for wire protocol messages
    and generated sequences."""
    if self.isEnabledFor(TRACE_LOG_LEVEL):
        output = '[TRACE]'
        direction = kwargs.get('direction', None)
        if direction and direction in ['IN', 1]:
            direction = '<<<<<<<<<< [INCOMING] <<<<<<<<<<'
        elif direction and direction in ['OUT', 0]:
            direction = '>>>>>>>>>> [OUTGOING] >>>>>>>>>>'
        else:
            direction = ''
        if isinstance(message, bytes):
            message = message.decode('utf-8', errors='replace')
        elif isinstance(message, dict):
            message = json.dumps(message, sort_keys=True)
        output += '\n' + direction + '\n' if direction else ' '
        output += str(message).rstrip('\n')
        if direction:
            output += '\n' + direction
        self._log(TRACE_LOG_LEVEL, output, args)


def setup_logger(level):
    levels = [logging.ERROR, logging.WARN, logging.INFO, logging.DEBUG, TRACE_LOG_LEVEL]
    log_format = LOG_FORMAT_VERBOSE if level > 2 else '%(message)s'
    logging.addLevelName(TRACE_LOG_LEVEL, 'TRACE')
    logging.Logger.trace = trace_message
    logging.Logger.trace_incoming = trace_incoming
    logging.Logger.trace_outgoing = trace_outgoing
    logging.basicConfig(level=levels[min(level, len(levels) - 1)], format=log_format)


def add_file_handler(path, level=logging.INFO):
    """Mirror all log records of the package into a file,
    e.g. the train.log of a run directory."""
    handler = logging.FileHandler(path, mode='w', encoding='utf-8')
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter('%(asctime)s %(name)s %(levelname)s %(message)s'))
    logging.getLogger('toolcl').addHandler(handler)
    return handler


def remove_file_handler(handler):
    logging.getLogger('toolcl').removeHandler(handler)
    handler.close()


# Loggers created before setup_logger() still need the trace helpers.
logging.addLevelName(TRACE_LOG_LEVEL, 'TRACE')
logging.Logger.trace = trace_message
logging.Logger.trace_incoming = trace_incoming
logging.Logger.trace_outgoing = trace_outgoing
