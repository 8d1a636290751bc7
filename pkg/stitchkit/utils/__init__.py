from . import logging
from . import seeding
