"""Isotaxes: curves of constant posterior mean in the (x, σ²) plane."""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple
import numpy as np
from scipy import optimize, stats
from . import config
from .errors import ArgumentError
from .logger import create_logger
from .posterior import Observation, as_observations, posterior_mean, posterior_means
from .priors import ExponentialPrior, ImproperExponentialPrior, NormalPrior, ParetoPrior
from .workers import parallel_map

logger = create_logger(__name__)

# bracket expansion steps before a grid point is given up
MAX_BRACKET_DOUBLINGS = 60


@dataclass(frozen=True)
class IsotaxisCurve:
  level: float
  points: Tuple[Tuple[float, float], ...]
  rank_fraction: Optional[float] = None
  exact: bool = False
  omitted: int = field(default=0, compare=False)

  @property
  def x(self):
    return np.array([p[0] for p in self.points])

  @property
  def variance(self):
    return np.array([p[1] for p in self.points])

  @property
  def sigma(self):
    return np.sqrt(self.variance)


def _variance_grid(variance_grid):
  grid = np.asarray(variance_grid, dtype=float).ravel()
  if np.any(grid < 0) or not np.all(np.isfinite(grid)):
    raise ArgumentError("variance grid must hold finite nonnegative values")
  return grid


def _closed_form(prior, level, grid, pareto_exponent):
  if isinstance(prior, NormalPrior):
    return level * (prior.tau**2 + grid) / prior.tau**2
  if isinstance(prior, (ImproperExponentialPrior, ExponentialPrior)):
    return level + prior.rate * grid
  if isinstance(prior, ParetoPrior):
    # x - k·v/x = C with k = α+1 (density) or α (survival)
    k = prior.alpha + 1 if pareto_exponent == "density" else prior.alpha
    return level / 2 + np.sqrt(level**2 / 4 + k * grid)
  return None


def _solve_exact(prior, level, variance):
  if variance == 0:
    return level
  sigma = math.sqrt(variance)

  def gap(x):
    return posterior_mean(prior, Observation(x, sigma)) - level

  step = max(1.0, 10 * sigma)
  lo, hi = level - step, level + step
  for _ in range(MAX_BRACKET_DOUBLINGS):
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo <= 0 <= g_hi:
      return optimize.brentq(gap, lo, hi, xtol=config.ISOTAX_XTOL)
    step *= 2
    if g_lo > 0:
      lo = level - step
    if g_hi < 0:
      hi = level + step
  return None


def isotaxis_curve(prior, level, variance_grid, exact=False, rank_fraction=None, pareto_exponent="density"):
  """Points (x, σ²) whose posterior mean under `prior` equals `level`.

  Normal and improper exponential priors have exact closed forms. The
  proper exponential and Pareto closed forms are first-order, so
  exact=True root-finds on the quadrature posterior mean instead; priors
  without a closed form are always solved that way.
  """
  if pareto_exponent not in ("density", "survival"):
    raise ArgumentError(f"pareto_exponent must be density or survival, got {pareto_exponent!r}")
  grid = _variance_grid(variance_grid)
  closed = None
  if not exact or isinstance(prior, (NormalPrior, ImproperExponentialPrior)):
    closed = _closed_form(prior, level, grid, pareto_exponent)

  if closed is not None:
    points = tuple((float(x), float(v)) for x, v in zip(closed, grid))
    return IsotaxisCurve(level, points, rank_fraction, exact=isinstance(prior, (NormalPrior, ImproperExponentialPrior)))

  solved = parallel_map(lambda v: _solve_exact(prior, level, float(v)), grid)
  points = tuple((float(x), float(v)) for x, v in zip(solved, grid) if x is not None)
  omitted = len(grid) - len(points)
  if omitted:
    logger.warning(f"isotaxis_curve:omitted:{omitted}:level:{level}")
  return IsotaxisCurve(level, points, rank_fraction, exact=True, omitted=omitted)


def _top_count(alpha, n):
  return max(1, math.ceil(round(alpha * n, 9)))


def rank_threshold(prior, obs, alpha):
  """Posterior-mean score of the unit at rank ceil(alpha·n)."""
  if not 0 < alpha < 1:
    raise ArgumentError(f"rank fraction must lie in (0, 1), got {alpha}")
  observations = as_observations(obs)
  if len(observations) == 0:
    raise ArgumentError("rank_threshold needs observations")
  scores = np.sort(posterior_means(prior, observations))[::-1]
  return float(scores[_top_count(alpha, len(scores)) - 1])


def significance_curve(variance_grid, level=config.SIGNIFICANCE_LEVEL):
  """x = z·σ, the two-sided `level` significance boundary against θ = 0."""
  if not 0 < level < 1:
    raise ArgumentError(f"significance level must lie in (0, 1), got {level}")
  grid = _variance_grid(variance_grid)
  z = stats.norm.ppf((1 + level) / 2)
  return [(float(z * math.sqrt(v)), float(v)) for v in grid]


def default_variance_grid(obs, points=config.ISOTAX_GRID_POINTS):
  observations = as_observations(obs)
  return np.linspace(0.0, 1.05 * float(np.max(observations.sigma))**2, points)


def dataset_isotaxes(prior, obs, levels=None, variance_grid=None, exact=False):
  """Top-α isotaxes for a dataset; levels smaller than one unit are dropped."""
  observations = as_observations(obs)
  levels = config.ISOTAX_LEVELS if levels is None else levels
  grid = default_variance_grid(observations) if variance_grid is None else variance_grid
  scores = np.sort(posterior_means(prior, observations))[::-1]
  n = len(scores)

  curves = []
  for alpha in levels:
    if not 0 < alpha < 1:
      raise ArgumentError(f"rank fraction must lie in (0, 1), got {alpha}")
    if alpha * n < 1:
      logger.debug(f"dataset_isotaxes:dropped:{alpha}:n:{n}")
      continue
    level = float(scores[_top_count(alpha, n) - 1])
    curves.append(isotaxis_curve(prior, level, grid, exact=exact, rank_fraction=alpha))
  return curves


def curves_to_rows(curves, sigma_space=False):
  rows = []
  for curve in curves:
    for x, variance in curve.points:
      row = {"level_C": curve.level, "rank_fraction": curve.rank_fraction, "x": x}
      if sigma_space:
        row["sigma"] = math.sqrt(variance)
      else:
        row["variance"] = variance
      rows.append(row)
  return rows
