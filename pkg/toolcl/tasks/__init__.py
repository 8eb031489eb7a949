from .core import *
from .arithmetic import *
from .classification import *
from .benchmark import *
