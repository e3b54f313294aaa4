"""Seeded simulation study of misranking loss under misspecified priors."""
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Optional
import numpy as np
import yaml
from scipy import stats
from . import config
from .constants import DEFAULT_ALPHA, DEFAULT_ETA, DEFAULT_RATE, DEFAULT_TAU, Family, ParameterMode
from .errors import ArgumentError, RankPriorError
from .logger import create_logger
from .loss_theory import (
    LossScenario, misspecification_integral, optimal_hyperparameter, sigma_factor_expectation,
    weighted_top_decile_loss,
)
from .posterior import Observations, rank_by_point_estimate, rank_units
from .priors import make_prior, quantile
from .tail_mle import TailSample, fit_tail
from .translate import _t
from .workers import parallel_map

logger = create_logger(__name__)

DEFAULT_PARAMETERS = {
    Family.NORMAL: DEFAULT_TAU,
    Family.EXPONENTIAL: DEFAULT_RATE,
    Family.PARETO: DEFAULT_ALPHA,
}

ESTIMATING_FAMILIES = Family.PARAMETRIC + (Family.POINT,)


@dataclass(frozen=True)
class SimulationConfig:
  true_family: str = Family.NORMAL
  true_parameter: Optional[float] = None
  eta: float = DEFAULT_ETA
  n: int = 1000
  replicates: int = 200
  sigma_mean: float = config.SIGMA_MEAN
  sigma_offset: float = config.SIGMA_OFFSET
  seed: int = config.SIM_SEED
  parameter_mode: str = ParameterMode.OPTIMAL
  tail_quantile: float = config.TAIL_QUANTILE

  def __post_init__(self):
    if self.true_family not in Family.PARAMETRIC:
      raise ArgumentError(f"true prior family must be one of {Family.PARAMETRIC}, got {self.true_family!r}")
    if self.true_parameter is None:
      object.__setattr__(self, "true_parameter", DEFAULT_PARAMETERS[self.true_family])
    if self.n < 10:
      raise ArgumentError(f"simulation needs n ≥ 10, got {self.n}")
    if self.replicates < 1:
      raise ArgumentError(f"simulation needs at least one replicate, got {self.replicates}")
    if not self.sigma_mean > 0 or self.sigma_offset < 0:
      raise ArgumentError("sigma_mean must be positive and sigma_offset nonnegative")
    if self.parameter_mode not in ParameterMode.ALL:
      raise ArgumentError(f"parameter_mode must be one of {ParameterMode.ALL}, got {self.parameter_mode!r}")
    if not 0 < self.tail_quantile < 1:
      raise ArgumentError(f"tail_quantile must lie in (0, 1), got {self.tail_quantile}")

  @property
  def true_prior(self):
    return make_prior(self.true_family, self.true_parameter, self.eta)

  @property
  def cutoff(self):
    """The true prior's tail quantile, where tail fits are truncated."""
    return quantile(self.true_prior, self.tail_quantile)

  def to_dict(self):
    return asdict(self)

  @classmethod
  def from_dict(cls, data):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
      raise ArgumentError(f"unknown simulation settings: {', '.join(sorted(unknown))}")
    return cls(**data)

  @classmethod
  def load(cls, path):
    """Read a JSON or YAML settings file."""
    with open(path, "r", encoding="utf-8") as file:
      return cls.from_dict(yaml.safe_load(file) or {})


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
  thetas: np.ndarray
  observations: Observations

  def __post_init__(self):
    if len(self.thetas) != len(self.observations):
      raise ArgumentError("thetas and observations differ in length")


def replicate_seed(sim_config, replicate_index):
  return np.random.SeedSequence(sim_config.seed, spawn_key=(int(replicate_index),))


def simulate_dataset(sim_config, replicate_index):
  """θ from the true prior, σ = offset + Exponential(sigma_mean), x ~ N(θ, σ²).

  Each replicate owns three independent streams split from the root seed.
  """
  theta_seed, sigma_seed, noise_seed = replicate_seed(sim_config, replicate_index).spawn(3)
  n = sim_config.n
  thetas = sim_config.true_prior.rvs(n, np.random.default_rng(theta_seed))
  sigma = sim_config.sigma_offset + np.random.default_rng(sigma_seed).exponential(sim_config.sigma_mean, n)
  x = np.random.default_rng(noise_seed).normal(thetas, sigma)
  return SimulatedDataset(thetas, Observations(x, sigma))


@dataclass(frozen=True, eq=False)
class CellResult:
  true_family: str
  estimating_family: str
  parameter_mode: str
  n: int
  losses: np.ndarray
  parameters: np.ndarray = field(default_factory=lambda: np.empty(0))
  failures: int = 0

  @property
  def replicates(self):
    return len(self.losses)

  @property
  def mean_loss(self):
    return float(np.mean(self.losses)) if len(self.losses) else math.nan

  @property
  def standard_error(self):
    if len(self.losses) < 2:
      return math.nan
    return float(np.std(self.losses, ddof=1) / math.sqrt(len(self.losses)))

  @property
  def parameter_mean(self):
    return float(np.mean(self.parameters)) if len(self.parameters) else math.nan

  @property
  def parameter_sd(self):
    return float(np.std(self.parameters, ddof=1)) if len(self.parameters) > 1 else math.nan


def cell_parameters(sim_config, families):
  """Optimal estimating parameters, computed once per cell."""
  true_prior = sim_config.true_prior
  parameters = {}
  for family in families:
    if family == Family.POINT:
      continue
    parameters[family] = optimal_hyperparameter(true_prior, family, sim_config.cutoff)
  return parameters


def _replicate(sim_config, families, optimal, index):
  data = simulate_dataset(sim_config, index)
  reference = rank_units(sim_config.true_prior, data.observations)
  tail = None
  outcome = {}

  for family in families:
    try:
      if family == Family.POINT:
        ranking, parameter = rank_by_point_estimate(data.observations), None
      elif sim_config.parameter_mode == ParameterMode.OPTIMAL:
        parameter = optimal[family]
        if family == sim_config.true_family:
          ranking = reference
        else:
          ranking = rank_units(make_prior(family, parameter, sim_config.eta), data.observations)
      else:
        tail = tail or TailSample.from_observations(data.observations, sim_config.cutoff)
        parameter = fit_tail(family, tail)
        ranking = rank_units(make_prior(family, parameter, sim_config.eta), data.observations)
      outcome[family] = (weighted_top_decile_loss(data.thetas, ranking, reference), parameter)
    except RankPriorError as e:
      logger.warning(f"simulation:replicate_failed:{index}:{family}:{e}")
      outcome[family] = None
  return outcome


def run_cells(sim_config, families=ESTIMATING_FAMILIES):
  """Mean loss and parameter summary of every estimating family on shared datasets."""
  families = tuple(families)
  unknown = set(families) - set(ESTIMATING_FAMILIES)
  if unknown:
    raise ArgumentError(f"unknown estimating families: {', '.join(sorted(unknown))}")
  optimal = cell_parameters(sim_config, families) if sim_config.parameter_mode == ParameterMode.OPTIMAL else {}

  outcomes = parallel_map(lambda i: _replicate(sim_config, families, optimal, i), range(sim_config.replicates))

  results = {}
  for family in families:
    done = [o[family] for o in outcomes if o[family] is not None]
    losses = np.array([loss for loss, _ in done])
    parameters = np.array([p for _, p in done if p is not None])
    failures = len(outcomes) - len(done)
    results[family] = CellResult(sim_config.true_family, family, sim_config.parameter_mode, sim_config.n,
                                 losses, parameters, failures)
    logger.info(f"simulation:cell:{sim_config.true_family}:{family}:{sim_config.parameter_mode}:n:{sim_config.n}:"
                f"loss:{results[family].mean_loss:.6g}:failed:{failures}")
  return results


def run_cell(sim_config, estimating_family):
  return run_cells(sim_config, (estimating_family,))[estimating_family]


def study_configs(base=None, sizes=None, modes=ParameterMode.ALL, true_families=Family.PARAMETRIC, replicates=None):
  """Cartesian grid of cell settings; replicates default to the per-size table."""
  base = base or SimulationConfig()
  sizes = sizes or config.SIM_SIZES
  for true_family in true_families:
    for n in sizes:
      for mode in modes:
        count = replicates or config.SIM_REPLICATES.get(n, base.replicates)
        yield replace(base, true_family=true_family, true_parameter=None, n=n, replicates=count, parameter_mode=mode)


def run_study(configs) -> List[CellResult]:
  """Every estimating family for every setting; the point column once per (true prior, n)."""
  results = []
  seen_point = set()
  for sim_config in configs:
    key = (sim_config.true_family, sim_config.true_parameter, sim_config.n, sim_config.replicates)
    families = Family.PARAMETRIC
    if key not in seen_point:
      seen_point.add(key)
      families = ESTIMATING_FAMILIES
    results.extend(run_cells(sim_config, families).values())
  return results


def theoretical_cell_predictions(n, sigma_mean=config.SIGMA_MEAN, sigma_offset=config.SIGMA_OFFSET,
                                 tail_quantile=config.TAIL_QUANTILE) -> Dict:
  """Expected loss of every off-diagonal cell at optimal parameters.

  The loss integral times E[½(σ₁² - σ₂²)²] times the number of pairs;
  comparable across cells up to a common scale.
  """
  factor = sigma_factor_expectation(sigma_mean, sigma_offset) * n * (n - 1) / 2
  predictions = {}
  for true_family in Family.PARAMETRIC:
    true_prior = make_prior(true_family, DEFAULT_PARAMETERS[true_family], DEFAULT_ETA)
    a = quantile(true_prior, tail_quantile)
    for family in Family.PARAMETRIC:
      if family == true_family:
        continue
      estimating = make_prior(family, optimal_hyperparameter(true_prior, family, a), DEFAULT_ETA)
      predictions[(true_family, family)] = misspecification_integral(LossScenario(true_prior, estimating, a)) * factor
  return predictions


def prediction_agreement(predictions, observed):
  """Spearman correlation between predicted and observed cell losses on their shared keys."""
  keys = sorted(set(predictions) & set(observed))
  if len(keys) < 3:
    raise ArgumentError("need at least three shared cells to compare orderings")
  rho = stats.spearmanr([predictions[k] for k in keys], [observed[k] for k in keys])[0]
  return float(rho)


def observed_cell_losses(results, n, parameter_mode=ParameterMode.OPTIMAL):
  return {
      (r.true_family, r.estimating_family): r.mean_loss
      for r in results
      if r.n == n and r.parameter_mode == parameter_mode
      and r.estimating_family != Family.POINT and r.estimating_family != r.true_family
  }


def study_tables(results):
  """Loss rows (one per cell) and parameter rows (tail fits only)."""
  losses, parameters = [], []
  for r in results:
    losses.append({
        "true_family": r.true_family,
        "parameter_mode": r.parameter_mode if r.estimating_family != Family.POINT else "",
        "n": r.n,
        "est_family": r.estimating_family,
        "replicates": r.replicates,
        "failures": r.failures,
        "mean_loss": r.mean_loss,
        "standard_error": r.standard_error,
    })
    if r.parameter_mode == ParameterMode.TAIL_MLE and r.estimating_family != Family.POINT:
      parameters.append({
          "true_family": r.true_family,
          "n": r.n,
          "est_family": r.estimating_family,
          "parameter_mean": r.parameter_mean,
          "parameter_sd": r.parameter_sd,
      })
  return losses, parameters


def report(results, sim_config=None, agreement=None):
  lines = []
  groups = {}
  for r in results:
    groups.setdefault((r.true_family, r.n), []).append(r)

  for (true_family, n), cells in groups.items():
    replicates = max(c.replicates + c.failures for c in cells)
    sigma_mean = sim_config.sigma_mean if sim_config else config.SIGMA_MEAN
    lines.append(_t("report.title", true_family=true_family, n=n, replicates=replicates, sigma_mean=sigma_mean))
    for mode in ParameterMode.ALL:
      in_mode = [c for c in cells if c.parameter_mode == mode]
      if not in_mode:
        continue
      lines.append(_t("report.mode", mode=mode))
      for c in in_mode:
        param = (_t("report.param", mean=c.parameter_mean, sd=c.parameter_sd)
                 if len(c.parameters) else _t("report.no_param"))
        lines.append(_t("report.cell", estimating=c.estimating_family, loss=c.mean_loss, se=c.standard_error,
                        param=param, failed=c.failures))
  if agreement is not None:
    lines.append(_t("report.prediction", rho=agreement))
  return "\n".join(lines)
