from toolcl.misc import TRACE_LOG_LEVEL
from toolcl.data.constants import *
from .exceptions import *
from .tokenizer import *

__version__ = '0.1.0'
