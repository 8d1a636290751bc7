from . import manifest
from . import synthesize
from . import evaluate
