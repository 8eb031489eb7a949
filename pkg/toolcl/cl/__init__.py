from .config import *
from .matrix import *
from .replay import *
from .evaluation import *
from .trainer import *
