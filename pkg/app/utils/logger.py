import logging
import sys

from pythonjsonlogger import jsonlogger

from app.config.settings import get_settings
from app.utils.log_file_handler import BufferedFileLogHandler


def get_logger(name=__name__):
    """
    Returns a logger configured with JSON formatting.
    This logger outputs to stderr and, when APP_LOG_FILE is set, appends
    buffered records to that file using BufferedFileLogHandler
    only if the environment is not a test environment.
    """
    logger = logging.getLogger(name)
    if not logger.handlers:  # Prevent adding handlers multiple times
        settings = get_settings()

        # Console handler; stdout is reserved for command output.
        console_handler = logging.StreamHandler(sys.stderr)
        formatter = jsonlogger.JsonFormatter(
            fmt="%(asctime)s %(name)s %(levelname)s %(message)s"
        )
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if settings.log_file and not settings.is_test:
            file_handler = BufferedFileLogHandler(settings.log_file, capacity=20)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        logger.setLevel(getattr(logging, settings.log_level, logging.INFO))
        logger.propagate = False
    return logger
