from .calls import *
from .oracles import *
from .protocol import *
from .registry import *
from .server import *
