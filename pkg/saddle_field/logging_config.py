# saddle_field/logging_config.py
import logging
import os
from datetime import datetime
from typing import Optional

from saddle_field.settings import Settings, load_settings

PACKAGE_LOGGER = "saddle_field"

_FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(funcName)s() - %(message)s'
_CONSOLE_FORMAT = '%(levelname)s - %(name)s - %(message)s'


class _FlushingFileHandler(logging.FileHandler):
    """Flushes after every record so an aborted solve still leaves its trail"""

    def emit(self, record):
        super().emit(record)
        if self.stream is not None:
            self.stream.flush()


def _log_file_path(log_dir: str, run_name: str) -> str:
    os.makedirs(log_dir, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return os.path.join(log_dir, f"saddle_field_{run_name}_{timestamp}.log")


def setup_logging(settings: Optional[Settings] = None, run_name: str = "run") -> Optional[str]:
    """
    Configure the saddle_field package logger for one run
    Console records go to stderr so standard output stays free for JSON results;
    the log file, when enabled, keeps DEBUG detail

    Args:
        settings: Runtime settings; read from the environment when omitted
        run_name: Tag placed in the log file name, usually the CLI command

    Returns:
        Path of the log file, or None when file logging is off
    """
    settings = settings or load_settings()
    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    log_file = None
    if settings.log_to_file:
        log_file = _log_file_path(settings.log_dir, run_name)
        file_handler = _FlushingFileHandler(log_file, mode='w', encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(_FILE_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
        logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, str(settings.log_level).upper(), logging.WARNING))
    console_handler.setFormatter(logging.Formatter(_CONSOLE_FORMAT))
    logger.addHandler(console_handler)

    logger.debug(f"{run_name}: logging initialized (file: {log_file}, console level: {settings.log_level})")
    return log_file


def get_logger(name):
    """Logger for a saddle_field module, normally called with __name__"""
    return logging.getLogger(name)
