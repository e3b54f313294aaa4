"""Hyperparameter estimation from the observations above a cutoff.

Each estimating family is fitted by maximum likelihood conditional on
x > a, so the fitted prior matches the upper tail where the ranking
is decided.
"""
import math
from dataclasses import dataclass
import numpy as np
from scipy import optimize, stats
from . import config
from .constants import Family
from .errors import ArgumentError, EstimationFailure
from .logger import create_logger
from .posterior import Observations, as_observations
from .priors import ExponentialPrior, NormalPrior, ParetoPrior, parameter_of, quantile
from .quadrature import integrate_checked

logger = create_logger(__name__)


@dataclass(frozen=True, eq=False)
class TailSample:
  x: np.ndarray
  sigma: np.ndarray
  a: float

  def __post_init__(self):
    x = np.array(self.x, dtype=float).ravel()
    sigma = np.array(self.sigma, dtype=float).ravel()
    if x.shape != sigma.shape:
      raise ArgumentError("tail sample x and sigma differ in length")
    if np.any(x <= self.a):
      raise ArgumentError(f"tail sample contains values at or below the cutoff {self.a}")
    if len(x) < 2:
      raise ArgumentError(f"tail sample needs at least 2 observations above {self.a}, got {len(x)}")
    object.__setattr__(self, "x", x)
    object.__setattr__(self, "sigma", sigma)

  @classmethod
  def from_observations(cls, obs, a):
    observations = as_observations(obs)
    above = observations.x > a
    return cls(observations.x[above], observations.sigma[above], float(a))

  @property
  def n_a(self):
    return len(self.x)

  @property
  def observations(self):
    return Observations(self.x, self.sigma)


def empirical_cutoff(obs, tail_quantile=config.TAIL_QUANTILE):
  return float(np.quantile(as_observations(obs).x, tail_quantile))


# normal

def _normal_bracket_term(sample, tau):
  """Score divided by τ."""
  s2 = tau**2 + sample.sigma**2
  s = np.sqrt(s2)
  z = sample.a / s
  hazard = np.exp(stats.norm.logpdf(z) - stats.norm.logsf(z))
  return float(np.sum(sample.x**2 / s2**2 - 1 / s2 - sample.a * hazard / (s2 * s)))


def normal_score(sample, tau):
  """d/dτ of the truncated log-likelihood."""
  return tau * _normal_bracket_term(sample, tau)


def normal_loglik(sample, tau):
  s2 = tau**2 + sample.sigma**2
  return float(np.sum(-sample.x**2 / (2 * s2) - np.log(s2) / 2 - stats.norm.logsf(sample.a / np.sqrt(s2))))


def normal_approximation(sample):
  """Closed-form τ̂ from replacing the hazard term by a/s²."""
  excess = sample.x**2 - sample.a**2
  total = float(np.sum(excess + sample.sigma**2))
  cross = float(np.sum(excess * sample.sigma**2))
  disc = total**2 - 8 * sample.n_a * cross
  tau2 = (total + math.sqrt(disc)) / (2 * sample.n_a) if disc >= 0 else total / sample.n_a
  return math.sqrt(tau2) if tau2 > 0 else math.sqrt(float(np.mean(excess)) or 1.0)


def fit_tail_normal(sample):
  lo = config.TAIL_BRACKET_LOW
  hi = config.TAIL_BRACKET_FACTOR * float(np.max(np.abs(sample.x)))
  start = normal_approximation(sample)
  g_lo, g_hi = _normal_bracket_term(sample, lo), _normal_bracket_term(sample, hi)
  if not g_lo > 0 > g_hi:
    raise EstimationFailure(f"normal tail score has no sign change on [{lo}, {hi}]", approximation=start)

  tolerance = max(config.TAIL_SCORE_TOLERANCE, 1e-8 * sample.n_a)
  try:
    tau = optimize.newton(lambda t: _normal_bracket_term(sample, t), min(max(start, lo), hi),
                          tol=1e-13, maxiter=50)
    if not (lo <= tau <= hi and abs(normal_score(sample, tau)) < tolerance):
      raise RuntimeError(f"newton left the bracket or stalled at {tau}")
  except (RuntimeError, OverflowError, ZeroDivisionError) as e:
    logger.debug(f"fit_tail_normal:bisection:{e}")
    tau = optimize.brentq(lambda t: _normal_bracket_term(sample, t), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
  return float(tau)


# exponential

def exponential_loglik(sample, rate):
  """Approximate conditional log-likelihood with Φ(x/σ - λσ) ≈ 1."""
  return float(sample.n_a * math.log(rate) + rate**2 * np.sum(sample.sigma**2) / 2 - rate * np.sum(sample.x - sample.a))


def exponential_score(sample, rate):
  return float(rate * np.sum(sample.sigma**2) - np.sum(sample.x - sample.a) + sample.n_a / rate)


def fit_tail_exponential(sample):
  excess = float(np.sum(sample.x - sample.a))
  if excess <= 0:
    raise ArgumentError("exponential tail fit needs Σ(x - a) > 0")
  spread = float(np.sum(sample.sigma**2))
  disc = excess**2 - 4 * sample.n_a * spread
  if spread == 0 or disc < 0:
    return sample.n_a / excess
  # minus-branch root written without cancellation
  return 2 * sample.n_a / (excess + math.sqrt(disc))


# pareto

def _pareto_sums(sample):
  s = sample.sigma**2 / sample.x**2
  log_excess = float(np.sum(np.log(sample.x) - math.log(sample.a)))
  return log_excess, float(np.sum(s)), float(np.sum(s**2))


def pareto_polynomial(sample):
  """Coefficients (highest degree first) of α·score(α)."""
  log_excess, s1, s2 = _pareto_sums(sample)
  return np.array([
      -s2 / 2,
      -9 * s2 / 4,
      s1 - 13 * s2 / 4,
      -log_excess + 3 * s1 / 2 - 6 * s2 / 4,
      float(sample.n_a),
  ])


def pareto_score(sample, alpha):
  return float(np.polyval(pareto_polynomial(sample), alpha) / alpha)


def pareto_loglik(sample, alpha):
  """Exact conditional log-likelihood for σ = 0."""
  return float(np.sum(math.log(alpha) + alpha * math.log(sample.a) - (alpha + 1) * np.log(sample.x)))


def pareto_approximation(sample):
  log_excess, s1, _ = _pareto_sums(sample)
  n = sample.n_a
  return n / log_excess + (s1 / 2) * (3 * n / log_excess**2 + n**2 / log_excess**3)


def fit_tail_pareto(sample):
  if np.any(sample.x <= 0):
    raise ArgumentError("pareto tail fit needs positive x")
  if sample.a <= 0:
    raise ArgumentError("pareto tail fit needs a positive cutoff")
  start = pareto_approximation(sample)
  coefficients = pareto_polynomial(sample)
  roots = np.roots(coefficients)
  real = roots[(np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))) & (roots.real > 0)].real
  if real.size == 0:
    raise EstimationFailure("pareto score polynomial has no positive root", approximation=start)

  nearest = float(real[np.argmin(np.abs(real - start))])
  derivative = np.polyder(coefficients)
  try:
    polished = optimize.newton(lambda a: np.polyval(coefficients, a), nearest,
                               fprime=lambda a: np.polyval(derivative, a), tol=1e-14, maxiter=50)
  except RuntimeError:
    polished = nearest
  return float(polished) if polished > 0 else nearest


TAIL_FITS = {
    Family.NORMAL: fit_tail_normal,
    Family.EXPONENTIAL: fit_tail_exponential,
    Family.PARETO: fit_tail_pareto,
}


def fit_tail(family, sample):
  if family not in TAIL_FITS:
    raise ArgumentError(f"no tail fit for family {family!r}")
  return TAIL_FITS[family](sample)


def tail_approximation(family, sample):
  if family == Family.NORMAL:
    return normal_approximation(sample)
  if family == Family.EXPONENTIAL:
    return sample.n_a / float(np.sum(sample.x - sample.a))
  if family == Family.PARETO:
    return pareto_approximation(sample)
  raise ArgumentError(f"no tail approximation for family {family!r}")


# moments

def exp_log1p_moment(rate):
  """E log(1 + X), X ~ Exponential(rate)."""
  if not rate > 0:
    raise ArgumentError("rate must be positive")
  return integrate_checked(lambda x: rate * math.exp(-rate * x) * math.log1p(x), 0, math.inf, label="E log(1+X)")


def exp_invsq_moment(rate):
  """E (1 + X)^-2, X ~ Exponential(rate)."""
  if not rate > 0:
    raise ArgumentError("rate must be positive")
  return integrate_checked(lambda x: rate * math.exp(-rate * x) / (1 + x)**2, 0, math.inf, label="E (1+X)^-2")


def _conditional_expectation(prior, func, a):
  """E[func(θ) | θ > a] under the prior."""
  survival = float(prior.dist.sf(a))
  return integrate_checked(lambda t: func(t) * float(prior.dist.pdf(t)), a, math.inf, label="tail expectation") / survival


def _tail_log_moments(prior, a):
  """m = E(log θ - log a | θ > a) and q = E(θ⁻² | θ > a)."""
  if isinstance(prior, ParetoPrior):
    return 1 / prior.alpha, prior.alpha / ((prior.alpha + 2) * a**2)
  if isinstance(prior, ExponentialPrior):
    scaled = prior.rate * a
    return exp_log1p_moment(scaled), exp_invsq_moment(scaled) / a**2
  m = _conditional_expectation(prior, lambda t: math.log(t / a), a)
  q = _conditional_expectation(prior, lambda t: t**-2, a)
  return m, q


def sigma_second_moment(sigma_mean, offset=0.0):
  return offset**2 + 2 * offset * sigma_mean + 2 * sigma_mean**2


def expected_tail_estimate(true_prior, family, a=None, sigma_mean=config.SIGMA_MEAN, sigma_offset=0.0):
  """Large-sample limit of the tail MLE, or None where it does not exist.

  The normal-family value under a non-normal truth uses the closed-form
  approximation √E(θ² - a² | θ > a).
  """
  a = quantile(true_prior, config.TAIL_QUANTILE) if a is None else a
  if family == true_prior.family:
    return parameter_of(true_prior)

  if family == Family.EXPONENTIAL:
    if isinstance(true_prior, ParetoPrior):
      return (true_prior.alpha - 1) / a if true_prior.alpha > 1 else None
    if isinstance(true_prior, NormalPrior):
      tau = true_prior.tau
      hazard = math.exp(stats.norm.logpdf(a / tau) - stats.norm.logsf(a / tau))
      return 1 / (tau * hazard - a)
    return 1 / _conditional_expectation(true_prior, lambda t: t - a, a)

  if family == Family.NORMAL:
    if isinstance(true_prior, ParetoPrior) and true_prior.alpha <= 2:
      return None
    if isinstance(true_prior, ExponentialPrior):
      lam = true_prior.rate
      return math.sqrt(2 * a / lam + 2 / lam**2)
    return math.sqrt(_conditional_expectation(true_prior, lambda t: t * t - a * a, a))

  if family == Family.PARETO:
    m, q = _tail_log_moments(true_prior, a)
    second = sigma_second_moment(sigma_mean, sigma_offset)
    return 1 / m + second * q / 2 * (3 / m**2 + 1 / m**3)

  raise ArgumentError(f"no expected estimate for family {family!r}")
