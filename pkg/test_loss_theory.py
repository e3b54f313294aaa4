import itertools
import math
import numpy as np
import pytest
from .constants import EXPONENTIAL_CUTOFF, NORMAL_CUTOFF, PARETO_CUTOFF, Family
from .errors import ArgumentError, DivergenceError
from .loss_theory import (
    LossScenario, cutoff_loss, expected_loss, family_prior, inversion_count, inversion_decomposition,
    linear_parameter, loss_breakdown, loss_table, misestimation_sensitivity, misspecification_integral,
    misspecification_integral_quadrature, optimal_expected_loss, optimal_hyperparameter,
    optimal_hyperparameter_numeric, point_estimate_integral, point_estimate_integral_quadrature,
    sigma_factor_expectation, weighted_top_decile_loss,
)
from .posterior import RankedList
from .priors import ExponentialPrior, NormalPrior, ParetoPrior, make_prior

NORMAL = NormalPrior(1.0)
EXPONENTIAL = ExponentialPrior(1.0)
PARETO = ParetoPrior(2.0, 0.5)
CUTOFFS = {Family.NORMAL: NORMAL_CUTOFF, Family.EXPONENTIAL: EXPONENTIAL_CUTOFF, Family.PARETO: PARETO_CUTOFF}
TRUE_PRIORS = {Family.NORMAL: NORMAL, Family.EXPONENTIAL: EXPONENTIAL, Family.PARETO: PARETO}

OFF_DIAGONAL = [
    (Family.NORMAL, Family.EXPONENTIAL, 1.561386, 0.000622064),
    (Family.NORMAL, Family.PARETO, 1.2898, 0.002082605),
    (Family.EXPONENTIAL, Family.NORMAL, 1.700526, 0.0001542356),
    (Family.EXPONENTIAL, Family.PARETO, 1.677186, 0.0001014394),
    (Family.PARETO, Family.NORMAL, 1 / math.sqrt(0.72), 0.002081682),
    (Family.PARETO, Family.EXPONENTIAL, 1.581139, 0.0003614032),
]
OFF_DIAGONAL_IDS = ["N/E", "N/P", "E/N", "E/P", "P/N", "P/E"]

SENSITIVITIES = [
    # the printed normal/normal entry is twice the quadratic coefficient
    (Family.NORMAL, Family.NORMAL, 0.04933429 / 2),
    (Family.NORMAL, Family.EXPONENTIAL, 0.009862926),
    (Family.NORMAL, Family.PARETO, 0.004307),
    (Family.EXPONENTIAL, Family.NORMAL, 0.04052242),
    (Family.EXPONENTIAL, Family.EXPONENTIAL, 0.005),
    (Family.EXPONENTIAL, Family.PARETO, 0.0006835),
    (Family.PARETO, Family.NORMAL, 0.02108185),
    (Family.PARETO, Family.EXPONENTIAL, 0.005059644),
    (Family.PARETO, Family.PARETO, 0.001445613),
]


def optimal_scenario(true_family, est_family):
  true_prior = TRUE_PRIORS[true_family]
  a = CUTOFFS[true_family]
  estimating = make_prior(est_family, optimal_hyperparameter(true_prior, est_family, a))
  return LossScenario(true_prior, estimating, a)


@pytest.mark.parametrize("true_family, est_family, parameter, _", OFF_DIAGONAL, ids=OFF_DIAGONAL_IDS)
def test_optimal_hyperparameters(true_family, est_family, parameter, _):
  value = optimal_hyperparameter(TRUE_PRIORS[true_family], est_family, CUTOFFS[true_family])
  assert value == pytest.approx(parameter, rel=1e-4)


@pytest.mark.parametrize("true_family, est_family, _, loss", OFF_DIAGONAL, ids=OFF_DIAGONAL_IDS)
def test_expected_losses(true_family, est_family, _, loss):
  assert misspecification_integral(optimal_scenario(true_family, est_family)) == pytest.approx(loss, rel=1e-4)


@pytest.mark.parametrize("true_family, expected", [
    (Family.NORMAL, 0.02466714), (Family.EXPONENTIAL, 0.005), (Family.PARETO, 0.01301051),
], ids=["normal", "exponential", "pareto"])
def test_point_estimate_integrals(true_family, expected):
  true_prior, a = TRUE_PRIORS[true_family], CUTOFFS[true_family]
  assert point_estimate_integral(true_prior, a) == pytest.approx(expected, rel=1e-4)
  assert point_estimate_integral_quadrature(true_prior, a) == pytest.approx(point_estimate_integral(true_prior, a),
                                                                           rel=1e-6)


@pytest.mark.parametrize("true_family, est_family, expected", SENSITIVITIES,
                         ids=[f"{t[0]}/{e[0]}".upper() for t, e, _ in SENSITIVITIES])
def test_sensitivities(true_family, est_family, expected):
  true_prior, a = TRUE_PRIORS[true_family], CUTOFFS[true_family]
  coefficient = misestimation_sensitivity(true_prior, est_family, a)
  assert coefficient == pytest.approx(expected, rel=1e-3)

  optimum = linear_parameter(make_prior(est_family, optimal_hyperparameter(true_prior, est_family, a)))
  h = 0.05 * optimum

  def loss(p):
    return misspecification_integral(LossScenario(true_prior, family_prior(est_family, p), a))

  second_difference = (loss(optimum + h) + loss(optimum - h) - 2 * loss(optimum)) / (2 * h * h)
  assert second_difference == pytest.approx(coefficient, rel=1e-3)


@pytest.mark.parametrize("true_family, est_family, _, __", OFF_DIAGONAL, ids=OFF_DIAGONAL_IDS)
def test_closed_forms_match_quadrature(true_family, est_family, _, __):
  scenario = optimal_scenario(true_family, est_family)
  assert misspecification_integral_quadrature(scenario) == pytest.approx(misspecification_integral(scenario), rel=1e-6)


@pytest.mark.parametrize("true_prior, estimating", [
    (NormalPrior(1.3), NormalPrior(0.8)),
    (ExponentialPrior(0.7), ExponentialPrior(1.2)),
    (ParetoPrior(2.5, 0.5), ParetoPrior(1.5, 0.5)),
    (ParetoPrior(2.0, 0.5), NormalPrior(2.0)),
], ids=["normal", "exponential", "pareto", "pareto_normal"])
def test_closed_forms_away_from_the_optimum(true_prior, estimating):
  scenario = LossScenario(true_prior, estimating, 1.0)
  assert misspecification_integral_quadrature(scenario) == pytest.approx(misspecification_integral(scenario), rel=1e-6)


@pytest.mark.parametrize("true_family, est_family", [
    (Family.EXPONENTIAL, Family.NORMAL), (Family.NORMAL, Family.EXPONENTIAL), (Family.PARETO, Family.EXPONENTIAL),
], ids=["E/N", "N/E", "P/E"])
def test_numeric_optimum_agrees(true_family, est_family):
  true_prior, a = TRUE_PRIORS[true_family], CUTOFFS[true_family]
  assert optimal_hyperparameter_numeric(true_prior, est_family, a) == pytest.approx(
      optimal_hyperparameter(true_prior, est_family, a), rel=1e-5)


def test_same_family_is_optimal_at_truth():
  assert optimal_hyperparameter(PARETO, Family.PARETO, PARETO_CUTOFF) == 2.0
  assert misspecification_integral(LossScenario(EXPONENTIAL, EXPONENTIAL, EXPONENTIAL_CUTOFF)) == 0.0


def test_pareto_normal_divergence():
  with pytest.raises(DivergenceError):
    misspecification_integral(LossScenario(ParetoPrior(0.4, 0.5), NormalPrior(1.0), 1.0))


def test_scenario_validation():
  with pytest.raises(ArgumentError):
    LossScenario(ExponentialPrior(1.0), NormalPrior(1.0), -1.0)


def test_sigma_factor_expectation():
  assert sigma_factor_expectation(0.02) == pytest.approx(20 * 0.02**4, rel=1e-12)
  rng = np.random.default_rng(0)
  s1, s2 = 0.001 + rng.exponential(0.02, (2, 400000))
  empirical = np.mean((s1**2 - s2**2)**2 / 2)
  assert sigma_factor_expectation(0.02, 0.001) == pytest.approx(empirical, rel=0.05)


def test_optimal_and_expected_loss():
  assert optimal_expected_loss(NORMAL, 1.0, 1.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-12)
  scenario = LossScenario(EXPONENTIAL, ExponentialPrior(2.0), 0.0, sigma1=0.3, sigma2=0.1)
  assert expected_loss(scenario) == pytest.approx((0.09 - 0.01)**2 / 2 * 0.5, rel=1e-12)
  with pytest.raises(ArgumentError):
    expected_loss(LossScenario(EXPONENTIAL, ExponentialPrior(2.0), 0.0))


def permutation_ranking(order):
  n = len(order)
  scores = np.empty(n)
  scores[list(order)] = np.arange(n, 0, -1)
  return RankedList.from_scores(scores)


def test_cutoff_losses_sum_to_inversion_gaps_exhaustively():
  checked = 0
  for n in range(2, 7):
    thetas = np.arange(n, dtype=float) ** 1.5
    for order in itertools.permutations(range(n)):
      ranking = permutation_ranking(order)
      breakdown = loss_breakdown(thetas, ranking)
      assert breakdown.total_over_cutoffs == pytest.approx(inversion_decomposition(thetas, ranking), abs=1e-12)
      checked += 1
  assert checked == 2 + 6 + 24 + 120 + 720


def test_cutoff_losses_sum_to_inversion_gaps_randomly():
  rng = np.random.default_rng(1)
  for _ in range(1000):
    thetas = rng.normal(size=50)
    ranking = permutation_ranking(rng.permutation(50))
    total = loss_breakdown(thetas, ranking).total_over_cutoffs
    assert total == pytest.approx(inversion_decomposition(thetas, ranking), rel=1e-12, abs=1e-12)


def test_inversions_of_small_example():
  thetas = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
  # ranked by θ: 3, 5, 1, 4, 2
  ranking = permutation_ranking([2, 4, 0, 3, 1])
  assert inversion_count(thetas, ranking) == 4
  assert inversion_decomposition(thetas, ranking) == pytest.approx(7.0)
  assert sum(cutoff_loss(thetas, ranking, k) for k in range(1, 6)) == pytest.approx(7.0)


def test_weighted_top_decile_loss():
  thetas = np.arange(20, dtype=float)
  reference = RankedList.from_scores(thetas)
  swapped = thetas.copy()
  swapped[[18, 19]] = swapped[[19, 18]]
  assert weighted_top_decile_loss(thetas, reference, reference) == 0.0
  assert weighted_top_decile_loss(thetas, RankedList.from_scores(swapped), reference) == pytest.approx(1.0)
  with pytest.raises(ArgumentError):
    weighted_top_decile_loss(thetas[:9], RankedList.from_scores(thetas[:9]), RankedList.from_scores(thetas[:9]))


def test_ranking_must_be_a_permutation():
  with pytest.raises(ArgumentError):
    inversion_count(np.arange(3.0), RankedList.from_scores([1.0, 2.0]))


def test_loss_table_rows():
  rows = loss_table(0.9)
  assert len(rows) == 12
  row = next(r for r in rows if r["true_family"] == Family.EXPONENTIAL and r["est_family"] == Family.NORMAL)
  assert row["optimal_param"] == pytest.approx(1.700526, rel=1e-5)
  assert row["integral_loss"] == pytest.approx(0.0001542356, rel=1e-4)
  point = next(r for r in rows if r["true_family"] == Family.PARETO and r["est_family"] == Family.POINT)
  assert point["integral_loss"] == pytest.approx(0.01301051, rel=1e-4)
  assert math.isnan(point["sensitivity"])
