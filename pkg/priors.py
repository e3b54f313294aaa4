import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar, Tuple
import numpy as np
from scipy import stats
from .constants import Family, DEFAULT_ETA
from .errors import ArgumentError, PriorDomainError
from .quadrature import tail_integral


def _check_positive(name, value):
  if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
    raise ArgumentError(f"{name} must be a positive finite number, got {value!r}")


def _unwrap(value):
  return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class PriorSpec:
  family: ClassVar[str] = None
  continuous: ClassVar[bool] = True
  proper: ClassVar[bool] = True

  @property
  def params(self):
    raise NotImplementedError

  @property
  def support_min(self):
    return -math.inf

  @property
  def dist(self):
    raise PriorDomainError(f"{self.family} prior has no normalized distribution")

  def pdf(self, theta):
    return self.dist.pdf(theta)

  def logpdf(self, theta):
    return self.dist.logpdf(theta)

  def cdf(self, theta):
    return self.dist.cdf(theta)

  def ppf(self, p):
    return self.dist.ppf(p)

  def rvs(self, n, rng):
    return np.asarray(self.dist.rvs(size=n, random_state=rng), dtype=float)

  def lambda_rate(self, theta):
    raise PriorDomainError(f"lambda_rate is undefined for a {self.family} prior")

  def to_dict(self):
    return {"family": self.family, "params": self.params}

  def to_json(self):
    return json.dumps(self.to_dict(), sort_keys=True)

  @staticmethod
  def from_dict(data):
    family = data.get("family")
    if family not in PRIOR_CLASSES:
      raise ArgumentError(f"unknown prior family: {family!r}")
    try:
      return PRIOR_CLASSES[family](**data.get("params", {}))
    except TypeError as e:
      raise ArgumentError(f"bad parameters for {family} prior: {e}")

  def _require_support(self, theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < self.support_min):
      raise PriorDomainError(f"density of {self.family} prior is zero below {self.support_min}")
    return theta


@dataclass(frozen=True)
class NormalPrior(PriorSpec):
  tau: float
  family: ClassVar[str] = Family.NORMAL

  def __post_init__(self):
    _check_positive("tau", self.tau)

  @property
  def params(self):
    return {"tau": float(self.tau)}

  @cached_property
  def dist(self):
    return stats.norm(0.0, self.tau)

  def lambda_rate(self, theta):
    return np.asarray(theta, dtype=float) / self.tau**2


@dataclass(frozen=True)
class ExponentialPrior(PriorSpec):
  rate: float
  family: ClassVar[str] = Family.EXPONENTIAL

  def __post_init__(self):
    _check_positive("rate", self.rate)

  @property
  def params(self):
    return {"rate": float(self.rate)}

  @property
  def support_min(self):
    return 0.0

  @cached_property
  def dist(self):
    return stats.expon(scale=1.0 / self.rate)

  def lambda_rate(self, theta):
    return np.full_like(self._require_support(theta), self.rate)


@dataclass(frozen=True)
class ImproperExponentialPrior(PriorSpec):
  """Unnormalized density e^{-λθ} on the whole line."""
  rate: float
  family: ClassVar[str] = Family.IMPROPER_EXPONENTIAL
  proper: ClassVar[bool] = False

  def __post_init__(self):
    _check_positive("rate", self.rate)

  @property
  def params(self):
    return {"rate": float(self.rate)}

  def pdf(self, theta):
    return np.exp(-self.rate * np.asarray(theta, dtype=float))

  def logpdf(self, theta):
    return -self.rate * np.asarray(theta, dtype=float)

  def cdf(self, theta):
    raise PriorDomainError("improper exponential prior has no cdf")

  def ppf(self, p):
    raise PriorDomainError("improper exponential prior has no quantiles")

  def rvs(self, n, rng):
    raise PriorDomainError("cannot sample from an improper prior")

  def lambda_rate(self, theta):
    return np.full_like(np.asarray(theta, dtype=float), self.rate)


@dataclass(frozen=True)
class ParetoPrior(PriorSpec):
  alpha: float
  eta: float = DEFAULT_ETA
  family: ClassVar[str] = Family.PARETO

  def __post_init__(self):
    _check_positive("alpha", self.alpha)
    _check_positive("eta", self.eta)

  @property
  def params(self):
    return {"alpha": float(self.alpha), "eta": float(self.eta)}

  @property
  def support_min(self):
    return float(self.eta)

  @cached_property
  def dist(self):
    return stats.pareto(b=self.alpha, scale=self.eta)

  def lambda_rate(self, theta):
    return (self.alpha + 1) / self._require_support(theta)


@dataclass(frozen=True)
class DiscretePrior(PriorSpec):
  support: Tuple[float, ...]
  weights: Tuple[float, ...]
  family: ClassVar[str] = Family.DISCRETE
  continuous: ClassVar[bool] = False

  def __post_init__(self):
    support = tuple(float(b) for b in np.ravel(self.support))
    weights = tuple(float(w) for w in np.ravel(self.weights))
    if not support or len(support) != len(weights):
      raise ArgumentError("discrete prior needs equally long, nonempty support and weights")
    if any(b >= c for b, c in zip(support, support[1:])):
      raise ArgumentError("discrete support must be sorted ascending without duplicates")
    if min(weights) < 0 or abs(math.fsum(weights) - 1) > 1e-12:
      raise ArgumentError("discrete weights must be nonnegative and sum to 1")
    object.__setattr__(self, "support", support)
    object.__setattr__(self, "weights", weights)

  @classmethod
  def normalized(cls, support, weights):
    weights = np.asarray(weights, dtype=float)
    return cls(tuple(support), tuple(weights / weights.sum()))

  @property
  def params(self):
    return {"support": list(self.support), "weights": list(self.weights)}

  @property
  def support_min(self):
    return self.support[0]

  @cached_property
  def _arrays(self):
    return np.asarray(self.support), np.asarray(self.weights)

  def pdf(self, theta):
    # probability mass at theta
    support, weights = self._arrays
    theta = np.asarray(theta, dtype=float)
    index = np.clip(np.searchsorted(support, theta), 0, len(support) - 1)
    return np.where(support[index] == theta, weights[index], 0.0)

  def logpdf(self, theta):
    with np.errstate(divide="ignore"):
      return np.log(self.pdf(theta))

  def cdf(self, theta):
    support, weights = self._arrays
    cumulative = np.concatenate([[0.0], np.cumsum(weights)])
    return np.minimum(cumulative[np.searchsorted(support, theta, side="right")], 1.0)

  def ppf(self, p):
    support, weights = self._arrays
    cumulative = np.cumsum(weights)
    index = np.searchsorted(cumulative, np.asarray(p) - 1e-15)
    return support[np.clip(index, 0, len(support) - 1)]

  def rvs(self, n, rng):
    support, weights = self._arrays
    return rng.choice(support, size=n, p=weights)


PRIOR_CLASSES = {
    Family.NORMAL: NormalPrior,
    Family.EXPONENTIAL: ExponentialPrior,
    Family.IMPROPER_EXPONENTIAL: ImproperExponentialPrior,
    Family.PARETO: ParetoPrior,
    Family.DISCRETE: DiscretePrior,
}


def make_prior(family, parameter, eta=DEFAULT_ETA):
  if family == Family.NORMAL:
    return NormalPrior(parameter)
  if family == Family.EXPONENTIAL:
    return ExponentialPrior(parameter)
  if family == Family.IMPROPER_EXPONENTIAL:
    return ImproperExponentialPrior(parameter)
  if family == Family.PARETO:
    return ParetoPrior(parameter, eta)
  raise ArgumentError(f"{family!r} is not a one-parameter family")


def parameter_of(prior):
  if isinstance(prior, NormalPrior):
    return prior.tau
  if isinstance(prior, (ExponentialPrior, ImproperExponentialPrior)):
    return prior.rate
  if isinstance(prior, ParetoPrior):
    return prior.alpha
  raise ArgumentError(f"{prior.family} prior has no single parameter")


def parse_prior(text):
  """Parse `{"family": ..., "params": ...}` JSON or the short form `family:p[,eta]`."""
  text = text.strip()
  if text.startswith("{"):
    try:
      return PriorSpec.from_dict(json.loads(text))
    except json.JSONDecodeError as e:
      raise ArgumentError(f"invalid prior JSON: {e}")

  family, _, values = text.partition(":")
  if not values:
    raise ArgumentError(f"prior {text!r} should look like family:parameter")
  try:
    numbers = [float(v) for v in values.split(",")]
  except ValueError:
    raise ArgumentError(f"non-numeric prior parameters in {text!r}")
  if family == Family.PARETO and len(numbers) == 2:
    return ParetoPrior(numbers[0], numbers[1])
  if len(numbers) != 1:
    raise ArgumentError(f"prior {text!r} takes one parameter")
  return make_prior(family, numbers[0])


def density(prior, theta):
  return _unwrap(prior.pdf(theta))


def log_density(prior, theta):
  return _unwrap(prior.logpdf(theta))


def cdf(prior, theta):
  return _unwrap(prior.cdf(theta))


def lambda_rate(prior, theta):
  if not prior.continuous:
    raise PriorDomainError(f"lambda_rate is undefined for a {prior.family} prior")
  if np.any(np.asarray(prior.pdf(theta)) <= 0):
    raise PriorDomainError(f"{prior.family} prior has zero density at {theta}")
  return _unwrap(prior.lambda_rate(theta))


def density_derivative(prior, theta):
  """π′(θ) = -λ(θ)π(θ); zero where the density vanishes."""
  theta = np.asarray(theta, dtype=float)
  inside = theta >= prior.support_min
  safe = np.where(inside, theta, max(prior.support_min, 0.0) if math.isfinite(prior.support_min) else 0.0)
  value = np.where(inside, -prior.lambda_rate(safe) * prior.pdf(safe), 0.0)
  return _unwrap(value)


def quantile(prior, p):
  if not np.all((np.asarray(p) > 0) & (np.asarray(p) < 1)):
    raise ArgumentError(f"quantile needs 0 < p < 1, got {p}")
  return _unwrap(prior.ppf(p))


def sample(prior, n, seed):
  if n < 1:
    raise ArgumentError(f"sample size must be at least 1, got {n}")
  rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
  return prior.rvs(int(n), rng)


def tail_density_square_integral(prior, a=-math.inf):
  """∫_a^∞ π(θ)² dθ."""
  if isinstance(prior, NormalPrior):
    tau = prior.tau
    return float(stats.norm.sf(math.sqrt(2) * a / tau) / (2 * math.sqrt(math.pi) * tau))
  if isinstance(prior, ExponentialPrior):
    lam = prior.rate
    return lam * math.exp(-2 * lam * max(a, 0.0)) / 2
  if isinstance(prior, ParetoPrior):
    alpha, eta = prior.alpha, prior.eta
    start = max(a, eta)
    return alpha**2 * eta**(2 * alpha) / ((2 * alpha + 1) * start**(2 * alpha + 1))
  if not prior.continuous or not prior.proper:
    raise PriorDomainError(f"no square integral for a {prior.family} prior")
  lo = max(a, prior.support_min)
  return tail_integral(lambda t: float(prior.pdf(t))**2, lo, label="square integral")
