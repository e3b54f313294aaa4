"""Downloads of the public real-data sources, never used by the test suite."""
from dataclasses import dataclass
from pathlib import Path
import httpx
from . import env
from .errors import ArgumentError, RankPriorError
from .logger import create_logger

logger = create_logger(__name__)

TIMEOUT = 60.0


@dataclass(frozen=True)
class DataSource:
  name: str
  url: str
  filename: str
  description: str


SOURCES = {
    "diagram": DataSource(
        "diagram",
        "http://diagram-consortium.org/downloads.html",
        "diagram_downloads.html",
        "type 2 diabetes GWAS summary statistics (odds ratio with 95% interval); "
        "pick the meta-analysis file from the downloaded index",
    ),
    "rvalues": DataSource(
        "rvalues",
        "https://cran.r-project.org/src/contrib/Archive/rvalues/",
        "rvalues_archive.html",
        "archive of the rvalues R package, whose bundled breast cancer gene-expression "
        "table provides estimate/stderr pairs",
    ),
}


class FetchError(RankPriorError):
  pass


def fetch(name, data_dir=None, client=None):
  """Download source `name` into data_dir and return the written path."""
  if name not in SOURCES:
    raise ArgumentError(f"unknown data source {name!r}; choose from {', '.join(sorted(SOURCES))}")
  source = SOURCES[name]
  target = Path(data_dir or env.RANKPRIOR_DATA_DIR) / source.filename
  target.parent.mkdir(parents=True, exist_ok=True)

  owns_client = client is None
  client = client or httpx.Client(timeout=TIMEOUT, follow_redirects=True)
  try:
    response = client.get(source.url)
    response.raise_for_status()
  except httpx.HTTPError as e:
    logger.error(f"fetch:error:{name}:{e}")
    raise FetchError(f"could not download {source.url}: {e}")
  finally:
    if owns_client:
      client.close()

  target.write_bytes(response.content)
  logger.info(f"fetch:written:{name}:{target}:{len(response.content)}")
  return target
