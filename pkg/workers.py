from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List
from . import env
from .logger import create_logger

logger = create_logger(__name__)


def worker_count(limit=None):
  count = env.RANKPRIOR_THREADS
  return max(1, min(count, limit)) if limit else count


def parallel_map(func: Callable, items: Iterable, max_workers=None) -> List:
  """Apply func to every item, returning results in input order.

  The first exception raised by any item propagates after the pool
  drains.
  """
  items = list(items)
  workers = worker_count(max_workers or len(items))
  if workers <= 1 or len(items) <= 1:
    return [func(item) for item in items]

  logger.debug(f"parallel_map:workers:{workers}:items:{len(items)}")
  with ThreadPoolExecutor(max_workers=workers) as pool:
    return list(pool.map(func, items))


def chunk_slices(n, size):
  return [slice(start, min(start + size, n)) for start in range(0, n, size)]
