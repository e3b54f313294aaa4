"""Nonparametric maximum-likelihood prior on a fixed grid, and its robustness bounds."""
import math
from dataclasses import dataclass, field
import numpy as np
from scipy import optimize, special, stats
from . import config
from .constants import LOCAL_MASS
from .errors import ArgumentError, NonConvergence
from .logger import create_logger
from .posterior import as_observations, Observations
from .priors import DiscretePrior, NormalPrior
from .quadrature import integrate_checked

logger = create_logger(__name__)

# sufficient-increase fraction and step halvings of the line search
ARMIJO = 1.0 / 3.0
LINE_SEARCH_HALVINGS = 50


@dataclass(frozen=True)
class NpmleConfig:
  grid_size: int = config.NPMLE_GRID_SIZE
  include_observations: bool = True
  max_observed_candidates: int = config.NPMLE_MAX_OBSERVED_CANDIDATES
  grid_padding: float = config.NPMLE_GRID_PADDING
  max_iterations: int = config.NPMLE_MAX_ITERATIONS
  loglik_tolerance: float = config.NPMLE_LOGLIK_TOLERANCE
  weight_prune_threshold: float = config.NPMLE_WEIGHT_PRUNE
  gradient_tolerance: float = config.NPMLE_GRADIENT_TOLERANCE
  em_warmup: int = config.NPMLE_EM_WARMUP
  stall_steps: int = config.NPMLE_STALL_STEPS

  def __post_init__(self):
    if self.grid_size < 2 and not self.include_observations:
      raise ArgumentError("npmle needs at least two grid points or the observed values")
    for name in ("loglik_tolerance", "weight_prune_threshold", "gradient_tolerance"):
      if not getattr(self, name) > 0:
        raise ArgumentError(f"{name} must be positive")
    if self.max_iterations < 1:
      raise ArgumentError("max_iterations must be at least 1")
    if self.em_warmup < 0 or self.stall_steps < 1:
      raise ArgumentError("em_warmup must be nonnegative and stall_steps at least 1")


@dataclass(frozen=True, eq=False)
class NpmleFit:
  prior: DiscretePrior
  loglik: float
  loglik_trace: tuple
  iterations: int
  converged: bool
  gradient_gap: float
  candidates: np.ndarray = field(repr=False)


def candidate_grid(observations, npmle_config):
  x, sigma = observations.x, observations.sigma
  pad = npmle_config.grid_padding * float(sigma.max())
  parts = []
  if npmle_config.grid_size >= 2:
    parts.append(np.linspace(x.min() - pad, x.max() + pad, npmle_config.grid_size))
  if npmle_config.include_observations:
    if len(x) > npmle_config.max_observed_candidates:
      parts.append(np.quantile(x, np.linspace(0, 1, npmle_config.max_observed_candidates)))
    else:
      parts.append(x)
  return np.unique(np.concatenate(parts))


class _Likelihood:
  """Row-scaled likelihood matrix A[j, i] = φ((x_j - b_i)/σ_j)/σ_j."""

  def __init__(self, observations, candidates):
    x, sigma = observations.x, observations.sigma
    log_a = stats.norm.logpdf((x[:, None] - candidates[None, :]) / sigma[:, None]) - np.log(sigma)[:, None]
    self.row_max = log_a.max(axis=1)
    self.scaled = np.exp(log_a - self.row_max[:, None])
    self.offset = float(self.row_max.sum())
    self.n = len(x)

  def loglik(self, weights):
    with np.errstate(divide="ignore"):
      return float(np.sum(np.log(self.scaled @ weights))) + self.offset

  def directional(self, weights):
    """D(b)/n for every candidate b."""
    marginal = self.scaled @ weights
    return (self.scaled.T @ (1.0 / marginal)) / self.n


def _peaks(direction):
  """Local maxima of the directional derivative that lie above 1."""
  padded = np.concatenate(([-np.inf], direction, [-np.inf]))
  return (direction >= padded[:-2]) & (direction >= padded[2:]) & (direction > 1.0)


def _em_step(weights, direction):
  updated = weights * direction
  return updated / updated.sum()


def _newton_target(likelihood, weights, active):
  """Weights maximizing the quadratic model of the log-likelihood on `active`, or None."""
  marginal = likelihood.scaled @ weights
  design = likelihood.scaled[:, active] / marginal[:, None]
  try:
    solution, _ = optimize.nnls(design, np.full(likelihood.n, 2.0), maxiter=50 * len(active))
  except RuntimeError as e:
    logger.warning(f"fit_npmle:nnls_failed:{e}")
    return None
  total = solution.sum()
  if not total > 0:
    return None
  target = np.zeros_like(weights)
  target[active] = solution / total
  return target


def _line_search(likelihood, weights, loglik, direction, target):
  """Backtrack from the full step until the Armijo condition holds; keep weights if none does."""
  slope = likelihood.n * (float(direction @ target) - float(direction @ weights))
  step = 1.0
  for _ in range(LINE_SEARCH_HALVINGS):
    trial = weights + step * (target - weights)
    trial_loglik = likelihood.loglik(trial)
    if trial_loglik >= loglik + ARMIJO * step * max(slope, 0.0):
      return trial, trial_loglik
    step /= 2
  return weights, loglik


def run_npmle(obs, npmle_config=None):
  """Fit the grid NPMLE and return the fit with its diagnostics.

  Plain EM steps come first; after the warm-up each step solves the quadratic
  model of the log-likelihood on the current support plus the peaks of the
  directional derivative by non-negative least squares, followed by a
  backtracking line search. The fit converges when the gradient certificate
  drops to the tolerance.
  """
  npmle_config = npmle_config or NpmleConfig()
  observations = as_observations(obs)
  if len(observations) == 0:
    raise ArgumentError("fit_npmle needs at least one observation")
  if np.any(observations.sigma <= 0):
    raise ArgumentError("fit_npmle needs sigma > 0 for every observation")

  candidates = candidate_grid(observations, npmle_config)
  likelihood = _Likelihood(observations, candidates)
  weights = np.full(len(candidates), 1.0 / len(candidates))
  loglik = likelihood.loglik(weights)
  trace = [loglik]
  converged = False
  stalled = 0
  iteration = 0

  for iteration in range(1, npmle_config.max_iterations + 1):
    direction = likelihood.directional(weights)
    gap = float(direction.max()) - 1.0
    if gap <= npmle_config.gradient_tolerance:
      converged = True
      break

    target = None
    if iteration > npmle_config.em_warmup:
      active = np.flatnonzero((weights > npmle_config.weight_prune_threshold) | _peaks(direction))
      target = _newton_target(likelihood, weights, active)
    if target is None:
      new_weights = _em_step(weights, direction)
      new_loglik = likelihood.loglik(new_weights)
    else:
      new_weights, new_loglik = _line_search(likelihood, weights, loglik, direction, target)

    if new_loglik < loglik - 1e-12 * abs(loglik):
      logger.warning(f"fit_npmle:loglik_decreased:{iteration}:{loglik}:{new_loglik}")
    stalled = stalled + 1 if new_loglik - loglik < npmle_config.loglik_tolerance else 0
    weights, loglik = new_weights, max(new_loglik, loglik)
    trace.append(new_loglik)
    if iteration % 100 == 0:
      logger.debug(f"fit_npmle:iteration:{iteration}:loglik:{loglik:.10g}:gap:{gap:.3g}")
    if stalled >= npmle_config.stall_steps:
      logger.warning(f"fit_npmle:stalled:{iteration}:gap:{gap:.3g}")
      break

  keep = weights >= npmle_config.weight_prune_threshold
  prior = DiscretePrior.normalized(candidates[keep], weights[keep])
  final_gap = gradient_certificate(prior, observations, candidates)
  fit = NpmleFit(prior, marginal_loglik(prior, observations), tuple(trace), iteration, converged, final_gap, candidates)

  if converged:
    logger.info(f"fit_npmle:converged:{iteration}:loglik:{fit.loglik:.10g}:support:{len(prior.support)}")
  else:
    logger.warning(f"fit_npmle:not_converged:{iteration}:gap:{final_gap:.3g}")
  return fit


def fit_npmle(obs, npmle_config=None, strict=False):
  """Discrete prior maximizing the marginal likelihood over the candidate grid.

  With strict=True a non-converged fit raises NonConvergence carrying it.
  """
  fit = run_npmle(obs, npmle_config)
  if strict and not fit.converged:
    raise NonConvergence(f"npmle did not converge in {fit.iterations} iterations", fit=fit)
  return fit.prior


def marginal_loglik(prior, obs):
  """Σ_j log ∫ φ((x_j - θ)/σ_j)/σ_j dπ(θ)."""
  observations = as_observations(obs)
  x, sigma = observations.x, observations.sigma
  if isinstance(prior, DiscretePrior):
    support, weights = prior._arrays
    with np.errstate(divide="ignore"):
      log_terms = np.log(weights)[None, :] + stats.norm.logpdf(x[:, None], support[None, :], sigma[:, None])
    return float(np.sum(special.logsumexp(log_terms, axis=1)))
  if isinstance(prior, NormalPrior):
    return float(np.sum(stats.norm.logpdf(x, 0.0, np.sqrt(prior.tau**2 + sigma**2))))

  total = 0.0
  lo = prior.support_min
  for xj, sj in zip(x, sigma):
    start = max(lo, xj - config.WINDOW_SIGMAS * sj) if math.isfinite(lo) else xj - config.WINDOW_SIGMAS * sj
    end = max(start, xj) + config.WINDOW_SIGMAS * sj
    value = integrate_checked(lambda t: float(prior.pdf(t)) * stats.norm.pdf(xj, t, sj), start, end,
                              label="marginal likelihood", floor=1e-300)
    total += math.log(value) if value > 0 else -math.inf
  return total


def gradient_certificate(prior, obs, candidates):
  """max_b D(b)/n - 1 over the candidates; ≤ 0 at the exact grid optimum."""
  observations = as_observations(obs)
  support, weights = prior._arrays
  x, sigma = observations.x, observations.sigma
  with np.errstate(divide="ignore"):
    log_marginal = special.logsumexp(
        np.log(weights)[None, :] + stats.norm.logpdf(x[:, None], support[None, :], sigma[:, None]), axis=1)
  log_density = stats.norm.logpdf(x[:, None], np.asarray(candidates)[None, :], sigma[:, None])
  direction = np.exp(log_density - log_marginal[:, None]).sum(axis=0) / len(x)
  return float(direction.max()) - 1.0


def local_mass(prior, x, halfwidth):
  """Prior mass in the open interval (x - halfwidth, x + halfwidth)."""
  support, weights = prior._arrays
  inside = (support > x - halfwidth) & (support < x + halfwidth)
  return float(weights[inside].sum())


def local_mass_halfwidth(n, sigma):
  return sigma * math.sqrt(2 * math.log(n) + 1)


def local_mass_floor(n):
  return LOCAL_MASS / n


def posterior_shift_bound(r, a, sigma):
  """|posterior mean - x| bound when mass ≥ 1/(r+1) lies within a of x."""
  if not r > 1:
    raise ArgumentError(f"posterior_shift_bound needs r > 1, got {r}")
  if a < 0 or not sigma > 0:
    raise ArgumentError("posterior_shift_bound needs a ≥ 0 and sigma > 0")
  return a + sigma * math.sqrt(2 * math.log(r))


def combined_robustness_bound(n, sigma):
  if n < 2:
    raise ArgumentError(f"combined_robustness_bound needs n ≥ 2, got {n}")
  r = n / LOCAL_MASS - 1
  return sigma * (math.sqrt(2 * math.log(n) + 1) + math.sqrt(2 * math.log(r)))


def figure_dataset(n=500, seed=0, mean=-2.3, scale=1.0):
  """θ ~ Normal(mean, scale²), σ² ~ Gamma(shape 2, scale 0.1), x ~ Normal(θ, σ²)."""
  rng = np.random.default_rng(seed)
  thetas = rng.normal(mean, scale, size=n)
  sigma = np.sqrt(rng.gamma(2.0, 0.1, size=n))
  x = rng.normal(thetas, sigma)
  return thetas, Observations(x, sigma)
