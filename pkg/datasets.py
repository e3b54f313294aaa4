"""Reading estimate/standard-error tables and writing result tables."""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple
import numpy as np
import pandas as pd
from . import config
from .errors import ArgumentError, IngestError
from .logger import create_logger
from .posterior import Observations, as_observations

logger = create_logger(__name__)

ESTIMATE = "estimate"
ODDS_RATIO = "odds_ratio"
FORMATS = ("auto", ESTIMATE, ODDS_RATIO)

# header spellings accepted for each canonical column
COLUMN_ALIASES = {
    "id": ("id", "snp", "unit", "name"),
    "estimate": ("estimate", "beta", "effect", "x"),
    "stderr": ("stderr", "se", "standard_error", "sigma"),
    "odds_ratio": ("odds_ratio", "or"),
    "ci_low": ("ci_low", "l95", "lower"),
    "ci_high": ("ci_high", "u95", "upper"),
}


@dataclass
class IngestResult:
  observations: Observations
  rejects: List[Tuple[int, str]] = field(default_factory=list)


def clean_header(name):
  return str(name).strip().lower().replace(" ", "_").replace("-", "_")


def _canonical_columns(frame):
  cleaned = [clean_header(c) for c in frame.columns]
  if len(cleaned) != len(set(cleaned)):
    raise IngestError(f"duplicated column names: {list(frame.columns)}")
  renames = {}
  for canonical, aliases in COLUMN_ALIASES.items():
    for column, clean in zip(frame.columns, cleaned):
      if clean in aliases and canonical not in renames.values():
        renames[column] = canonical
  return frame.rename(columns=renames)


def _read_frame(path):
  path = Path(path)
  if not path.is_file():
    raise IngestError(f"input file does not exist: {path}")
  if path.suffix.lower() == ".json":
    with open(path, "r", encoding="utf-8") as file:
      records = json.load(file)
    return pd.DataFrame(records, dtype=str), 1
  sep = "\t" if path.suffix.lower() in (".tsv", ".txt") else ","
  # header occupies line 1
  return pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False, skipinitialspace=True), 2


def _detect_format(frame, data_format):
  if data_format not in FORMATS:
    raise ArgumentError(f"format must be one of {FORMATS}, got {data_format!r}")
  if data_format != "auto":
    return data_format
  if {"estimate", "stderr"} <= set(frame.columns):
    return ESTIMATE
  if {"odds_ratio", "ci_low", "ci_high"} <= set(frame.columns):
    return ODDS_RATIO
  raise IngestError(f"cannot recognise columns {list(frame.columns)}: need estimate/stderr or odds_ratio/ci_low/ci_high")


def _number(value):
  number = float(value)
  if not math.isfinite(number):
    raise ValueError(f"non-finite value {value!r}")
  return number


def _parse_row(row, data_format):
  if data_format == ESTIMATE:
    x, sigma = _number(row["estimate"]), _number(row["stderr"])
    if sigma <= 0:
      raise ValueError(f"stderr must be positive, got {sigma}")
    return x, sigma
  ratio, low, high = _number(row["odds_ratio"]), _number(row["ci_low"]), _number(row["ci_high"])
  if not ratio > 0:
    raise ValueError(f"odds ratio must be positive, got {ratio}")
  if not high > low > 0:
    raise ValueError(f"need ci_high > ci_low > 0, got {low}..{high}")
  # a 95% interval spans about four standard errors on the log scale
  return math.log(ratio), (math.log(high) - math.log(low)) / 4


def ingest(path, data_format="auto", sigma_offset=0.0):
  """Parse a dataset into id-tagged Observations, collecting rejected rows with their line numbers."""
  if not sigma_offset >= 0:
    raise ArgumentError(f"sigma_offset must be nonnegative, got {sigma_offset}")
  frame, first_line = _read_frame(path)
  frame = _canonical_columns(frame)
  data_format = _detect_format(frame, data_format)

  ids, xs, sigmas, rejects = [], [], [], []
  seen = set()
  for position, row in enumerate(frame.to_dict("records")):
    line = position + first_line
    unit = str(row.get("id", "")).strip() or str(position + 1)
    try:
      if unit in seen:
        raise ValueError(f"duplicate id {unit!r}")
      x, sigma = _parse_row(row, data_format)
    except (ValueError, TypeError, KeyError) as e:
      rejects.append((line, str(e)))
      logger.debug(f"ingest:rejected:{line}:{e}")
      continue
    seen.add(unit)
    ids.append(unit)
    xs.append(x)
    sigmas.append(sigma + sigma_offset)

  if rejects:
    logger.warning(f"ingest:rejects:{len(rejects)}:{path}")
  if not ids:
    raise IngestError(f"no valid rows in {path}", rejects=rejects)
  logger.info(f"ingest:rows:{len(ids)}:format:{data_format}:{path}")
  return IngestResult(Observations(xs, sigmas, ids), rejects)


def naive_normal_variance(obs):
  """Method-of-moments τ² = mean(x²) - mean(σ²), floored."""
  observations = as_observations(obs)
  value = float(np.mean(observations.x**2) - np.mean(observations.sigma**2))
  return max(value, config.NAIVE_VARIANCE_FLOOR)


def _format_value(value):
  if isinstance(value, (float, np.floating)):
    return None if math.isnan(value) else float(config.FLOAT_FORMAT % value)
  if isinstance(value, np.integer):
    return int(value)
  return value


def write_table(rows, path=None, table_format="csv"):
  """Write rows as CSV (header first) or a JSON list; returns the text.

  Floats go through FLOAT_FORMAT so identical inputs give identical bytes.
  """
  if table_format not in ("csv", "json"):
    raise ArgumentError(f"table format must be csv or json, got {table_format!r}")
  frame = pd.DataFrame.from_records(list(rows))
  if table_format == "csv":
    text = frame.to_csv(index=False, float_format=config.FLOAT_FORMAT, lineterminator="\n")
  else:
    records = [{k: _format_value(v) for k, v in row.items()} for row in frame.to_dict("records")]
    text = json.dumps(records, indent=2, ensure_ascii=False) + "\n"

  if path is not None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
      file.write(text)
    logger.info(f"write_table:written:{path}:rows:{len(frame)}")
  return text
