from .transformer import *
from .optimizer import *
from .checkpoint import *
