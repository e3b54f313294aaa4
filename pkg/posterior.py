import math
from dataclasses import dataclass
import numpy as np
from scipy import special, stats
from . import config
from .errors import ArgumentError, NumericalFailure
from .logger import create_logger
from .priors import (
    DiscretePrior, ExponentialPrior, ImproperExponentialPrior, NormalPrior, ParetoPrior, lambda_rate,
)
from .quadrature import integrate_checked, integrate_vector
from .workers import chunk_slices, parallel_map

logger = create_logger(__name__)

# decay length (in z) below which a support edge counts as steep
STEEP_EDGE_SCALE = 0.05
# grid points used to place the reference inside the window
MODE_GRID_POINTS = 101


@dataclass(frozen=True)
class Observation:
  x: float
  sigma: float

  def __post_init__(self):
    if not math.isfinite(self.x) or not math.isfinite(self.sigma) or self.sigma < 0:
      raise ArgumentError(f"invalid observation x={self.x} sigma={self.sigma}")


class Observations:
  """Immutable columns of point estimates, standard errors and optional ids."""

  def __init__(self, x, sigma, ids=None):
    x = np.array(x, dtype=float).ravel()
    sigma = np.array(sigma, dtype=float).ravel()
    if x.shape != sigma.shape:
      raise ArgumentError("x and sigma must have the same length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(sigma))) or np.any(sigma < 0):
      raise ArgumentError("observations need finite x and nonnegative finite sigma")
    x.setflags(write=False)
    sigma.setflags(write=False)
    self.x = x
    self.sigma = sigma
    self.ids = None if ids is None else tuple(str(i) for i in ids)
    if self.ids is not None and len(self.ids) != len(x):
      raise ArgumentError("ids must match the number of observations")

  @classmethod
  def from_list(cls, observations):
    observations = list(observations)
    return cls([o.x for o in observations], [o.sigma for o in observations])

  def __len__(self):
    return len(self.x)

  def __getitem__(self, index):
    return Observation(float(self.x[index]), float(self.sigma[index]))

  def __iter__(self):
    for x, sigma in zip(self.x, self.sigma):
      yield Observation(float(x), float(sigma))

  def subset(self, mask):
    ids = None if self.ids is None else np.asarray(self.ids)[mask]
    return Observations(self.x[mask], self.sigma[mask], ids)


def as_observations(obs):
  if isinstance(obs, Observations):
    return obs
  if isinstance(obs, Observation):
    return Observations([obs.x], [obs.sigma])
  return Observations.from_list(obs)


@dataclass(frozen=True, eq=False)
class RankedList:
  order: np.ndarray
  scores: np.ndarray

  @classmethod
  def from_scores(cls, scores):
    scores = np.array(scores, dtype=float).ravel()
    if np.any(np.isnan(scores)):
      raise NumericalFailure("cannot rank NaN scores", index=int(np.flatnonzero(np.isnan(scores))[0]))
    # primary key last: descending score, then ascending index
    order = np.lexsort((np.arange(len(scores)), -scores))
    ordered = scores[order]
    order.setflags(write=False)
    ordered.setflags(write=False)
    return cls(order, ordered)

  def __len__(self):
    return len(self.order)

  @property
  def positions(self):
    """Zero-based rank of every unit, indexed by unit."""
    positions = np.empty(len(self.order), dtype=int)
    positions[self.order] = np.arange(len(self.order))
    return positions

  def top(self, k):
    return self.order[:k]


def posterior_mean(prior, obs):
  """Exact posterior mean E[θ | x] for x ~ N(θ, σ²)."""
  x, sigma = float(obs.x), float(obs.sigma)
  if sigma == 0:
    return x

  if isinstance(prior, NormalPrior):
    return prior.tau**2 * x / (prior.tau**2 + sigma**2)
  if isinstance(prior, ImproperExponentialPrior):
    return x - prior.rate * sigma**2
  if isinstance(prior, ExponentialPrior):
    return float(_exponential_means(prior.rate, np.asarray(x), np.asarray(sigma)))
  if isinstance(prior, DiscretePrior):
    support, weights = prior._arrays
    with np.errstate(divide="ignore"):
      logw = np.log(weights) + stats.norm.logpdf((x - support) / sigma)
    return float(special.softmax(logw) @ support)
  return _quadrature_mean(prior, x, sigma)


def _log_prior_ratio(prior, theta, reference):
  if isinstance(prior, ParetoPrior):
    with np.errstate(divide="ignore", invalid="ignore"):
      ratio = -(prior.alpha + 1) * np.log(theta / reference)
    return np.where(theta >= prior.eta, ratio, -np.inf)
  if isinstance(prior, ExponentialPrior):
    return np.where(theta >= 0, -prior.rate * (theta - reference), -np.inf)
  return prior.logpdf(theta) - prior.logpdf(reference)


def _z_window(prior, x, sigma):
  """Standardized window [z_low, z_high] holding the posterior mass, and a reference z_ref.

  The window spans the first-order posterior mode and x, widened by the
  window width and cut at the support; z_ref is the largest log weight on
  a coarse grid over it. `edge_scale` is the decay length of the log
  weight at the lower support edge when the weight falls away from that
  edge inside the window, else 1.
  """
  width = config.WINDOW_SIGMAS
  x, sigma = np.asarray(x, dtype=float), np.asarray(sigma, dtype=float)
  lower = prior.support_min
  if math.isfinite(lower):
    z_bound = (lower - x) / sigma
    edge_slope = -sigma * prior.lambda_rate(np.full_like(x, lower)) - z_bound
    theta = np.maximum(x, lower)
  else:
    z_bound = np.full_like(x, -np.inf)
    edge_slope = np.zeros_like(x)
    theta = x
  z_first = np.maximum(-sigma * prior.lambda_rate(theta), z_bound)
  z_low = np.maximum(z_bound, np.minimum(z_first, 0.0) - width)
  z_high = np.maximum(z_first, 0.0) + width

  grid = z_low[..., None] + (z_high - z_low)[..., None] * np.linspace(0.0, 1.0, MODE_GRID_POINTS)
  anchor = (x + sigma * z_first)[..., None]
  log_w = _log_prior_ratio(prior, x[..., None] + sigma[..., None] * grid, anchor) - grid**2 / 2
  z_ref = np.take_along_axis(grid, np.argmax(log_w, axis=-1, keepdims=True), axis=-1)[..., 0]

  edge = (edge_slope < 0) & (z_low == z_bound)
  edge_scale = np.where(edge, 1.0 / np.maximum(-edge_slope, 1.0), 1.0)
  return z_low, z_ref, z_high, edge_scale


def _quadrature_mean(prior, x, sigma):
  z_low, z_ref, z_high, edge_scale = (float(v) for v in _z_window(prior, x, sigma))
  theta_ref = x + sigma * z_ref
  points = [z_ref, z_ref + 1.0] + [z_low + edge_scale * k for k in (1.0, 10.0, 40.0)]

  def weight(z):
    return float(np.exp(_log_prior_ratio(prior, x + sigma * z, theta_ref) - (z * z - z_ref * z_ref) / 2))

  normalizer = integrate_checked(weight, z_low, z_high, label="posterior normalizer", points=points)
  if normalizer <= 0:
    raise NumericalFailure(f"posterior normalizer vanished at x={x}, sigma={sigma}")
  shift = integrate_checked(lambda z: (z - z_ref) * weight(z), z_low, z_high, label="posterior first moment",
                            floor=config.QUAD_MAX_RELERR * normalizer, points=points)
  return x + sigma * (z_ref + shift / normalizer)


def posterior_mean_quadrature(prior, obs):
  """Quadrature posterior mean for any continuous proper prior, bypassing closed forms."""
  if float(obs.sigma) == 0:
    return float(obs.x)
  return _quadrature_mean(prior, float(obs.x), float(obs.sigma))


def posterior_mean_approx(prior, obs):
  """First-order approximation x - λ(x)σ²."""
  return float(obs.x) - lambda_rate(prior, float(obs.x)) * float(obs.sigma)**2


def _exponential_means(rate, x, sigma):
  # N(x - λσ², σ²) truncated to θ ≥ 0
  mu = x - rate * sigma**2
  ratio = np.exp(stats.norm.logpdf(mu / sigma) - special.log_ndtr(mu / sigma))
  return mu + sigma * ratio


def _means_chunk(prior, x, sigma):
  zero = sigma == 0
  safe_sigma = np.where(zero, 1.0, sigma)

  if isinstance(prior, NormalPrior):
    means = prior.tau**2 * x / (prior.tau**2 + sigma**2)
  elif isinstance(prior, ImproperExponentialPrior):
    means = x - prior.rate * sigma**2
  elif isinstance(prior, ExponentialPrior):
    means = _exponential_means(prior.rate, x, safe_sigma)
  elif isinstance(prior, DiscretePrior):
    support, weights = prior._arrays
    with np.errstate(divide="ignore"):
      logw = np.log(weights)[None, :] + stats.norm.logpdf((x[:, None] - support[None, :]) / safe_sigma[:, None])
    means = special.softmax(logw, axis=1) @ support
  else:
    means = _vector_quadrature_means(prior, x, safe_sigma)
  return np.where(zero, x, means)


def _vector_quadrature_means(prior, x, sigma):
  z_low, z_ref, z_high, edge_scale = _z_window(prior, x, sigma)
  means = np.empty_like(x)
  # a mode on a steep support edge gets the scalar path with breakpoints
  steep = edge_scale < STEEP_EDGE_SCALE
  for i in np.flatnonzero(steep):
    means[i] = _quadrature_mean(prior, float(x[i]), float(sigma[i]))
  rest = ~steep
  if not rest.any():
    return means

  x, sigma, z_low, z_ref, z_high = x[rest], sigma[rest], z_low[rest], z_ref[rest], z_high[rest]
  theta_ref = x + sigma * z_ref
  span = z_high - z_low

  def integrand(t):
    z = z_low + t * span
    w = np.exp(_log_prior_ratio(prior, x + sigma * z, theta_ref) - (z * z - z_ref * z_ref) / 2) * span
    return np.concatenate([w, (z - z_ref) * w])

  moments = integrate_vector(integrand, 0.0, 1.0, label="posterior means")
  normalizer, shift = moments[:len(x)], moments[len(x):]
  means[rest] = x + sigma * (z_ref + shift / normalizer)
  return means


def posterior_means(prior, obs):
  """Exact posterior means for every observation, in input order."""
  observations = as_observations(obs)
  slices = chunk_slices(len(observations), config.RANK_CHUNK_SIZE)

  def run(part):
    x, sigma = observations.x[part], observations.sigma[part]
    try:
      return _means_chunk(prior, x, sigma)
    except NumericalFailure as e:
      logger.warning(f"posterior_means:vector_failed:{e}")
      # locate the offending unit with the scalar path
      return np.array([_indexed_mean(prior, observations, i) for i in range(part.start, part.stop)])

  return np.concatenate(parallel_map(run, slices)) if slices else np.empty(0)


def _indexed_mean(prior, observations, index):
  try:
    return posterior_mean(prior, observations[index])
  except NumericalFailure as e:
    raise NumericalFailure(str(e), index=index)


def rank_scores(scores):
  return RankedList.from_scores(scores)


def rank_units(prior, obs):
  observations = as_observations(obs)
  if len(observations) == 0:
    raise ArgumentError("cannot rank an empty list of observations")
  scores = posterior_means(prior, observations)
  bad = np.flatnonzero(~np.isfinite(scores))
  if bad.size:
    raise NumericalFailure("posterior mean is not finite", index=int(bad[0]))
  return RankedList.from_scores(scores)


def rank_by_point_estimate(obs):
  observations = as_observations(obs)
  if len(observations) == 0:
    raise ArgumentError("cannot rank an empty list of observations")
  return RankedList.from_scores(observations.x)
