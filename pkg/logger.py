import logging
from .formatter import ColorFormatter
from . import env

logging.basicConfig(level=env.LOG_LEVEL, handlers=[ColorFormatter.get_handler()])


def create_logger(module_name):
  return logging.getLogger(f"rankprior:{module_name}")


def set_quiet(quiet=True):
  logging.getLogger().setLevel(logging.WARNING if quiet else env.LOG_LEVEL)
