import logging
import re
from collections import defaultdict
from itertools import cycle
from . import env


class ColorFormatter(logging.Formatter):
  COLOR_CODES = cycle([
      "\033[34m",   # blue
      "\033[35m",   # purple
      "\033[36m",   # cyan
      "\033[33m",   # yellow
      "\033[32m",   # green
      "\033[94m",   # light blue
      "\033[95m",   # light purple
      "\033[96m",   # light cyan
  ])

  MODULE_COLORS = defaultdict(lambda: next(ColorFormatter.COLOR_CODES))
  URL_COLOR = "\033[94m"
  NUMBER_COLOR = "\033[92m"
  KEYWORD_COLOR = "\033[95m"
  LEVEL_COLORS = {
      "DEBUG": "\033[90m",
      "INFO": "\033[33m",
      "WARNING": "\033[93m",
      "ERROR": "\033[31m",
      "CRITICAL": "\033[41m",
  }
  RESET_COLOR = "\033[0m"
  KEYWORDS = [
      "normal", "exponential", "pareto", "discrete", "npmle",
      "converged", "diverged", "rejected", "failed", "replicate", "cell",
      "optimal", "tail_mle", "point",
  ]

  # urls first so digits inside them stay untouched
  TOKEN_PATTERN = re.compile(
      r"(?P<url>https?://[\w./%?=&-]+)"
      r"|(?P<number>-?\d+(?:\.\d+)?(?:e[-+]?\d+)?)"
      r"|(?P<keyword>\b(?:" + "|".join(KEYWORDS) + r")\b)"
  )

  def __init__(self, *args, use_color=None, **kwargs):
    super().__init__(*args, **kwargs)
    self.use_color = (not env.NO_COLOR) if use_color is None else use_color

  def _paint(self, match):
    kind = match.lastgroup
    color = {"url": self.URL_COLOR, "number": self.NUMBER_COLOR}.get(kind, self.KEYWORD_COLOR)
    return f"{color}{match.group(0)}{self.RESET_COLOR}"

  def format(self, record):
    message = record.getMessage()
    module = record.name.split(":")[-1]
    level = record.levelname
    timestamp = self.formatTime(record, "%Y-%m-%d %H:%M:%S")

    if self.use_color:
      message = self.TOKEN_PATTERN.sub(self._paint, message)
      level = f"{self.LEVEL_COLORS.get(level, '')}{level}{self.RESET_COLOR}"
      module = f"{self.MODULE_COLORS[module]}{module}{self.RESET_COLOR}"

    line = f"{timestamp} {level}:{module}:{message}"
    if record.exc_info:
      line = f"{line}\n{self.formatException(record.exc_info)}"
    return line

  @classmethod
  def get_handler(cls, stream=None):
    handler = logging.StreamHandler(stream)
    use_color = not env.NO_COLOR and getattr(handler.stream, "isatty", lambda: False)()
    handler.setFormatter(cls(use_color=use_color))
    return handler
