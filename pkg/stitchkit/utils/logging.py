import os
import logging
from logging.handlers import RotatingFileHandler

from rich.console import Console
from rich.logging import RichHandler

TRACE_LEVEL_NUM = 5
SUCCESS_LEVEL_NUM = 21
EVENTS_LEVEL_NUM = 38
DEFAULT_LOG_BACKUP_COUNT = 10

logger = logging.getLogger("stitchkit")
events_logger = logging.getLogger("stitchkit.event")
events_logger.propagate = False
events_logger.addHandler(logging.NullHandler())


def _add_level(level_num: int, name: str):
    logging.addLevelName(level_num, name)
    method_name = name.lower()

    def log_at_level(self, message, *args, **kws):
        if self.isEnabledFor(level_num):
            self._log(level_num, message, args, **kws)

    setattr(logging.Logger, method_name, log_at_level)


_add_level(TRACE_LEVEL_NUM, "TRACE")
_add_level(SUCCESS_LEVEL_NUM, "SUCCESS")
_add_level(EVENTS_LEVEL_NUM, "EVENT")


def setup_logging(debug: bool = False, trace: bool = False) -> logging.Logger:
    """
    Configures the package logger for console output.

    Console records go to stderr through rich so that stdout stays reserved
    for the JSON lines emitted by ``score`` and ``eer``. Calling this twice
    replaces the previous console handler instead of stacking a second one.
    """
    level = logging.INFO
    if debug:
        level = logging.DEBUG
    if trace:
        level = TRACE_LEVEL_NUM

    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)

    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        markup=False,
        rich_tracebacks=True,
    )
    handler.setLevel(level)
    logger.addHandler(handler)
    logger.setLevel(min(level, EVENTS_LEVEL_NUM))
    logger.propagate = False
    return logger


def setup_events_logger(full_path, events_retention_size):
    """
    Attaches a rotating ``events.log`` in ``full_path`` that only receives
    EVENT records (one per written sample). Lines carry no timestamp, so the
    log is reproducible like every other file of the output tree.
    """
    events_logger.setLevel(EVENTS_LEVEL_NUM)
    events_logger.propagate = False

    for handler in list(events_logger.handlers):
        events_logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter("%(levelname)s | %(message)s")

    file_handler = RotatingFileHandler(
        os.path.join(full_path, "events.log"),
        maxBytes=int(events_retention_size),
        backupCount=DEFAULT_LOG_BACKUP_COUNT,
    )
    file_handler.setFormatter(formatter)
    file_handler.setLevel(EVENTS_LEVEL_NUM)
    events_logger.addHandler(file_handler)

    return events_logger


def close_events_logger():
    for handler in list(events_logger.handlers):
        events_logger.removeHandler(handler)
        handler.close()
    events_logger.addHandler(logging.NullHandler())
