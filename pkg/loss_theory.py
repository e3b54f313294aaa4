"""Ranking losses, expected-loss integrals, optimal hyperparameters and sensitivities.

Expected losses are reported on the integral scale, i.e. without the
σ-factor ½(σ₁² - σ₂²)²; `expected_loss` multiplies it back in.
"""
import math
from dataclasses import dataclass
from typing import Optional
import numpy as np
from scipy import optimize, special, stats
from .constants import Family
from .errors import ArgumentError, DivergenceError, PriorDomainError
from .logger import create_logger
from .posterior import RankedList
from .priors import (
    ExponentialPrior, NormalPrior, ParetoPrior, PriorSpec, density_derivative, make_prior, parameter_of, quantile,
    tail_density_square_integral,
)
from .quadrature import tail_integral
from .workers import parallel_map

logger = create_logger(__name__)

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True, eq=False)
class LossBreakdown:
  per_cutoff: np.ndarray
  total_over_cutoffs: float
  weighted_top_decile: float
  cutoff_count: int


@dataclass(frozen=True)
class LossScenario:
  true_prior: PriorSpec
  estimating_prior: PriorSpec
  a: float
  sigma1: Optional[float] = None
  sigma2: Optional[float] = None

  def __post_init__(self):
    if not (self.true_prior.continuous and self.estimating_prior.continuous):
      raise ArgumentError("loss scenarios need continuous priors")
    if self.a < self.true_prior.support_min:
      raise ArgumentError(f"cutoff {self.a} lies below the support of the true prior")


def _thetas_and_order(true_thetas, ranking):
  thetas = np.asarray(true_thetas, dtype=float)
  order = np.asarray(ranking.order)
  if len(order) != len(thetas) or not np.array_equal(np.sort(order), np.arange(len(thetas))):
    raise ArgumentError("ranking is not a permutation of the units")
  return thetas, order


def _cutoff_losses(thetas, order):
  best = np.cumsum(np.sort(thetas)[::-1])
  chosen = np.cumsum(thetas[order])
  return np.maximum(best - chosen, 0.0)


def cutoff_loss(true_thetas, ranking, k):
  """l_k: best possible top-k total minus the top-k total the ranking picks."""
  thetas, order = _thetas_and_order(true_thetas, ranking)
  if not 1 <= k <= len(thetas):
    raise ArgumentError(f"cutoff k={k} outside 1..{len(thetas)}")
  return float(np.sort(thetas)[::-1][:k].sum() - thetas[order[:k]].sum())


def inversion_decomposition(true_thetas, ranking):
  """Σ over pairs ranked in the wrong order of their θ gap."""
  thetas, order = _thetas_and_order(true_thetas, ranking)
  ranked = thetas[order]
  # pairs (i < j) in ranked order with ranked[i] < ranked[j]
  gaps = ranked[None, :] - ranked[:, None]
  return float(np.triu(np.maximum(gaps, 0.0), k=1).sum())


def inversion_count(true_thetas, ranking):
  thetas, order = _thetas_and_order(true_thetas, ranking)
  ranked = thetas[order]
  return int(np.triu(ranked[None, :] > ranked[:, None], k=1).sum())


def weighted_top_decile_loss(true_thetas, estimated_ranking, reference_ranking):
  """Σ_{i=1}^{m} (m - i)(θ_(i) - θ_[i]) with m = floor(n/10)."""
  thetas, estimated = _thetas_and_order(true_thetas, estimated_ranking)
  _, reference = _thetas_and_order(true_thetas, reference_ranking)
  m = len(thetas) // 10
  if m < 1:
    raise ArgumentError(f"weighted top-decile loss needs n ≥ 10, got {len(thetas)}")
  weights = m - np.arange(1, m + 1)
  return float(np.dot(weights, thetas[reference[:m]] - thetas[estimated[:m]]))


def loss_breakdown(true_thetas, ranking, reference_ranking=None):
  thetas, order = _thetas_and_order(true_thetas, ranking)
  per_cutoff = _cutoff_losses(thetas, order)
  if reference_ranking is None:
    reference_ranking = RankedList.from_scores(thetas)
  m = len(thetas) // 10
  weighted = weighted_top_decile_loss(thetas, ranking, reference_ranking) if m >= 1 else 0.0
  return LossBreakdown(per_cutoff, float(per_cutoff.sum()), weighted, m)


def optimal_expected_loss(prior, sigma1, sigma2):
  """(σ₁² + σ₂²)/2 · ∫π²."""
  return (sigma1**2 + sigma2**2) / 2 * tail_density_square_integral(prior)


def sigma_factor(sigma1, sigma2):
  return (sigma1**2 - sigma2**2)**2 / 2


def sigma_factor_expectation(sigma_mean, offset=0.0):
  """E[½(σ₁² - σ₂²)²] = Var(σ²) for independent σ = offset + Exponential(mean)."""
  def moment(k):
    return sum(math.comb(k, j) * offset**(k - j) * math.factorial(j) * sigma_mean**j for j in range(k + 1))
  return moment(4) - moment(2)**2


def _normal_tail_terms(tau, a):
  """e^{-a²/τ²} and 1 - Φ(√2 a/τ)."""
  return math.exp(-a * a / tau**2), float(stats.norm.sf(math.sqrt(2) * a / tau))


def _normal_inverse_square_tail(tau, a):
  """∫_a^∞ θ⁻² e^{-θ²/τ²} dθ."""
  e, tail = _normal_tail_terms(tau, a)
  return e / a - 2 * SQRT_PI / tau * tail


def _exponential_tails(rate, a):
  """∫_a^∞ θ⁻¹ e^{-2λθ} and ∫_a^∞ θ⁻² e^{-2λθ}."""
  k1 = float(special.exp1(2 * rate * a))
  k2 = math.exp(-2 * rate * a) / a - 2 * rate * k1
  return k1, k2


def _pareto_prefactor(alpha, eta, a):
  return alpha**2 * eta**(2 * alpha) / a**(2 * alpha + 3)


def _closed_form_integral(true_prior, est_prior, a):
  t, e = true_prior, est_prior
  if isinstance(t, NormalPrior):
    tau = t.tau
    ex, tail = _normal_tail_terms(tau, a)
    if isinstance(e, NormalPrior):
      return (1 / tau**2 - 1 / e.tau**2)**2 * (a * ex / (4 * math.pi) + tau / (4 * SQRT_PI) * tail)
    if isinstance(e, ExponentialPrior):
      lam = e.rate
      return (lam**2 * tail / (2 * SQRT_PI * tau) - lam * ex / (2 * math.pi * tau**2)
              + a * ex / (4 * math.pi * tau**4) + tail / (4 * SQRT_PI * tau**3))
    if isinstance(e, ParetoPrior):
      al = e.alpha
      inner = ((al + 1)**2 * _normal_inverse_square_tail(tau, a) - (2 * al + 1.5) * SQRT_PI / tau * tail
               + a * ex / (2 * tau**2))
      return inner / (2 * math.pi * tau**2)

  if isinstance(t, ExponentialPrior):
    lam = t.rate
    decay = math.exp(-2 * lam * a)
    if isinstance(e, NormalPrior):
      u = 1 / e.tau**2
      return decay / lam * (lam**4 / 2 - (2 * lam**3 * a + lam**2) * u / 2 + (2 * lam**2 * a**2 + 2 * lam * a + 1) * u**2 / 4)
    if isinstance(e, ExponentialPrior):
      return lam * (lam - e.rate)**2 * decay / 2
    if isinstance(e, ParetoPrior):
      k1, k2 = _exponential_tails(lam, a)
      al = e.alpha
      return lam**2 * ((al + 1)**2 * k2 - 2 * lam * (al + 1) * k1 + lam * decay / 2)

  if isinstance(t, ParetoPrior):
    alpha = t.alpha
    pre = _pareto_prefactor(alpha, t.eta, a)
    first = (alpha + 1)**2 / (2 * alpha + 3)
    if isinstance(e, NormalPrior):
      if alpha <= 0.5:
        raise DivergenceError(f"loss integral diverges for a Pareto true prior with alpha={alpha} <= 1/2 under a normal estimating prior")
      u = 1 / e.tau**2
      return pre * (first - 2 * (alpha + 1) * a**2 * u / (2 * alpha + 1) + a**4 * u**2 / (2 * alpha - 1))
    if isinstance(e, ExponentialPrior):
      lam = e.rate
      return pre * (first - lam * a + lam**2 * a**2 / (2 * alpha + 1))
    if isinstance(e, ParetoPrior):
      return pre * (alpha - e.alpha)**2 / (2 * alpha + 3)
  return None


def _length_scale(prior):
  if isinstance(prior, NormalPrior):
    return prior.tau
  if isinstance(prior, (ExponentialPrior,)):
    return 1 / prior.rate
  if isinstance(prior, ParetoPrior):
    return prior.eta
  return 1.0


def misspecification_integral_quadrature(scenario):
  """∫_a^∞ π(x)²(λ(x) - λ̂(x))² dx by adaptive quadrature."""
  t, e = scenario.true_prior, scenario.estimating_prior
  if not t.proper:
    raise PriorDomainError("the true prior must be proper")

  def integrand(x):
    density = float(t.pdf(x))
    if density == 0:
      return 0.0
    return density**2 * (float(t.lambda_rate(x)) - float(e.lambda_rate(x)))**2

  lo = max(scenario.a, t.support_min, e.support_min)
  return tail_integral(integrand, lo, label="misspecification integral", scale=_length_scale(t))


def misspecification_integral(scenario):
  value = _closed_form_integral(scenario.true_prior, scenario.estimating_prior, scenario.a)
  if value is None:
    value = misspecification_integral_quadrature(scenario)
  if not math.isfinite(value):
    raise DivergenceError("misspecification integral is not finite")
  return max(value, 0.0)


def expected_loss(scenario):
  """Integral times ½(σ₁² - σ₂²)²."""
  if scenario.sigma1 is None or scenario.sigma2 is None:
    raise ArgumentError("expected_loss needs sigma1 and sigma2")
  return sigma_factor(scenario.sigma1, scenario.sigma2) * misspecification_integral(scenario)


def point_estimate_integral(true_prior, a):
  """∫_a^∞ π′(x)² dx, the loss integral for ranking by x alone."""
  if isinstance(true_prior, NormalPrior):
    tau = true_prior.tau
    ex, tail = _normal_tail_terms(tau, a)
    return (a * ex + SQRT_PI * tau * tail) / (4 * math.pi * tau**4)
  if isinstance(true_prior, ExponentialPrior):
    lam = true_prior.rate
    return lam**3 * math.exp(-2 * lam * max(a, 0.0)) / 2
  if isinstance(true_prior, ParetoPrior):
    alpha, eta = true_prior.alpha, true_prior.eta
    start = max(a, eta)
    return alpha**2 * (alpha + 1)**2 * eta**(2 * alpha) / ((2 * alpha + 3) * start**(2 * alpha + 3))
  return point_estimate_integral_quadrature(true_prior, a)


def point_estimate_integral_quadrature(true_prior, a):
  lo = max(a, true_prior.support_min)
  return tail_integral(lambda x: float(density_derivative(true_prior, x))**2, lo,
                       label="point-estimate integral", scale=_length_scale(true_prior))


def _basis_integral(true_prior, family, a, power):
  """∫_a^∞ π² b(θ)^power where λ̂ = p·b(θ) in the family's linear parametrization."""
  t = true_prior
  if family == Family.NORMAL:
    # b = θ, p = 1/τ̂²
    if power == 1:
      if isinstance(t, NormalPrior):
        ex, tail = _normal_tail_terms(t.tau, a)
        return (a * ex / (4 * math.pi) + t.tau / (4 * SQRT_PI) * tail) / t.tau**2
      if isinstance(t, ExponentialPrior):
        lam = t.rate
        return math.exp(-2 * lam * a) * (2 * lam**2 * a + lam) / 4
      if isinstance(t, ParetoPrior):
        return t.alpha**2 * (t.alpha + 1) * t.eta**(2 * t.alpha) / ((2 * t.alpha + 1) * a**(2 * t.alpha + 1))
    else:
      if isinstance(t, NormalPrior):
        ex, tail = _normal_tail_terms(t.tau, a)
        return a * ex / (4 * math.pi) + t.tau / (4 * SQRT_PI) * tail
      if isinstance(t, ExponentialPrior):
        lam = t.rate
        return math.exp(-2 * lam * a) * (2 * lam**2 * a**2 + 2 * lam * a + 1) / (4 * lam)
      if isinstance(t, ParetoPrior):
        if t.alpha <= 0.5:
          raise DivergenceError("∫π²θ² diverges for alpha <= 1/2")
        return t.alpha**2 * t.eta**(2 * t.alpha) / ((2 * t.alpha - 1) * a**(2 * t.alpha - 1))
  if family == Family.EXPONENTIAL:
    # b = 1, p = λ̂
    if power == 1:
      if isinstance(t, NormalPrior):
        ex, _ = _normal_tail_terms(t.tau, a)
        return ex / (4 * math.pi * t.tau**2)
      if isinstance(t, ExponentialPrior):
        return t.rate**2 * math.exp(-2 * t.rate * a) / 2
      if isinstance(t, ParetoPrior):
        return t.alpha**2 * (t.alpha + 1) * t.eta**(2 * t.alpha) / ((2 * t.alpha + 2) * a**(2 * t.alpha + 2))
    else:
      return tail_density_square_integral(t, a)
  if family == Family.PARETO:
    # b = 1/θ, p = α̂ + 1
    if power == 1:
      if isinstance(t, NormalPrior):
        _, tail = _normal_tail_terms(t.tau, a)
        return SQRT_PI * tail / t.tau / (2 * math.pi * t.tau**2)
      if isinstance(t, ExponentialPrior):
        k1, _ = _exponential_tails(t.rate, a)
        return t.rate**3 * k1
      if isinstance(t, ParetoPrior):
        return t.alpha**2 * (t.alpha + 1) * t.eta**(2 * t.alpha) / ((2 * t.alpha + 3) * a**(2 * t.alpha + 3))
    else:
      if isinstance(t, NormalPrior):
        return _normal_inverse_square_tail(t.tau, a) / (2 * math.pi * t.tau**2)
      if isinstance(t, ExponentialPrior):
        _, k2 = _exponential_tails(t.rate, a)
        return t.rate**2 * k2
      if isinstance(t, ParetoPrior):
        return t.alpha**2 * t.eta**(2 * t.alpha) / ((2 * t.alpha + 3) * a**(2 * t.alpha + 3))
  raise ArgumentError(f"no closed form for true {t.family} with {family} estimating family")


def _to_family_parameter(family, p):
  """Convert the linear parametrization back to τ̂, λ̂ or α̂."""
  if family == Family.NORMAL:
    return 1 / math.sqrt(p)
  if family == Family.PARETO:
    return p - 1
  return p


def optimal_hyperparameter(true_prior, estimating_family, a):
  """Parameter (τ̂, λ̂ or α̂) of the estimating family that minimises the loss integral.

  With λ̂ = p·b(θ) the integral is quadratic in p, so the optimum is
  ∫π²λb / ∫π²b².
  """
  if estimating_family == true_prior.family:
    return parameter_of(true_prior)
  if estimating_family not in Family.PARAMETRIC or true_prior.family not in Family.PARAMETRIC:
    raise ArgumentError(f"no optimal parameter for true {true_prior.family} with {estimating_family}")
  p = _basis_integral(true_prior, estimating_family, a, 1) / _basis_integral(true_prior, estimating_family, a, 2)
  if estimating_family == Family.NORMAL and p <= 0:
    raise DivergenceError("optimal 1/tau^2 is not positive")
  return _to_family_parameter(estimating_family, p)


def misestimation_sensitivity(true_prior, estimating_family, a):
  """Coefficient c with extra loss = c·(p - p*)², p = 1/τ², λ or α."""
  if estimating_family not in Family.PARAMETRIC or true_prior.family not in Family.PARAMETRIC:
    raise ArgumentError(f"no sensitivity for true {true_prior.family} with {estimating_family}")
  return _basis_integral(true_prior, estimating_family, a, 2)


def family_prior(family, p, eta=0.5):
  """Estimating prior from the linear parametrization p."""
  if family == Family.NORMAL:
    return make_prior(family, 1 / math.sqrt(p))
  if family == Family.PARETO:
    return make_prior(family, p - 1, eta)
  return make_prior(family, p)


def linear_parameter(prior):
  value = parameter_of(prior)
  if prior.family == Family.NORMAL:
    return 1 / value**2
  if prior.family == Family.PARETO:
    return value + 1
  return value


def optimal_hyperparameter_numeric(true_prior, estimating_family, a, bracket=(1e-6, 50.0)):
  """Bounded 1-D minimisation of the loss integral over the linear parameter."""
  lo, hi = bracket
  if estimating_family == Family.PARETO:
    lo = max(lo, 1.0 + 1e-9)

  def objective(p):
    scenario = LossScenario(true_prior, family_prior(estimating_family, p), a)
    return misspecification_integral(scenario)

  result = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
  return _to_family_parameter(estimating_family, result.x)


def default_true_priors():
  return [NormalPrior(1.0), ExponentialPrior(1.0), ParetoPrior(2.0, 0.5)]


def loss_table(cutoff_quantile=0.9, true_priors=None):
  """Rows for every true × estimating family pair plus the point-estimate rows."""
  true_priors = true_priors or default_true_priors()
  jobs = [(t, family) for t in true_priors for family in Family.PARAMETRIC + (Family.POINT,)]

  def evaluate(job):
    t, family = job
    a = quantile(t, cutoff_quantile)
    row = {"true_family": t.family, "est_family": family, "parameter": parameter_of(t), "cutoff": a}
    if family == Family.POINT:
      row.update(integral_loss=point_estimate_integral(t, a), optimal_param=float("nan"), sensitivity=float("nan"))
      return row
    optimum = optimal_hyperparameter(t, family, a)
    estimating = make_prior(family, optimum, getattr(t, "eta", 0.5))
    row.update(
        integral_loss=misspecification_integral(LossScenario(t, estimating, a)),
        optimal_param=optimum,
        sensitivity=misestimation_sensitivity(t, family, a),
    )
    return row

  rows = parallel_map(evaluate, jobs)
  logger.info(f"loss_table:rows:{len(rows)}:quantile:{cutoff_quantile}")
  return rows
