import locale
from .messages import messages
from .logger import create_logger

logger = create_logger(__name__)


def _current_language():
  try:
    lang = locale.getlocale()[0]
  except ValueError:
    lang = None
  return lang if lang in messages else "en_US"


translations = messages[_current_language()]


def _t(key, **kwargs):
  parts = key.split(".")
  translation = translations
  for part in parts:
    if part not in translation:
      logger.error(f"missing translation: {key}")
      return f"`{key}`"
    translation = translation[part]

  return translation.format(**kwargs)
