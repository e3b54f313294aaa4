import math
import numpy as np
import pytest
from .errors import ArgumentError
from .figures import render_svg
from .isotax import (
    curves_to_rows, dataset_isotaxes, default_variance_grid, isotaxis_curve, rank_threshold, significance_curve,
)
from .posterior import Observation, Observations, posterior_mean
from .priors import DiscretePrior, ExponentialPrior, ImproperExponentialPrior, NormalPrior, ParetoPrior


def test_normal_isotax_example():
  curve = isotaxis_curve(NormalPrior(1.0), 1.0, [1.0])
  assert curve.points == ((2.0, 1.0),)
  assert curve.exact


def test_normal_isotaxes_pass_through_minus_tau_squared():
  tau = 1.5
  curve = isotaxis_curve(NormalPrior(tau), 0.8, np.linspace(0, 2, 9))
  slope, intercept = np.polyfit(curve.x, curve.variance, 1)
  assert intercept == pytest.approx(-tau**2, rel=1e-10)
  assert slope == pytest.approx(tau**2 / 0.8, rel=1e-10)


def test_improper_exponential_isotax_example():
  curve = isotaxis_curve(ImproperExponentialPrior(2.0), 1.0, [0.5])
  assert curve.x[0] == pytest.approx(2.0)


@pytest.mark.parametrize("prior", [ImproperExponentialPrior(2.0), ExponentialPrior(2.0)], ids=["improper", "proper"])
def test_exponential_isotaxes_are_lines_of_slope_one_over_rate(prior):
  curve = isotaxis_curve(prior, 3.0, np.linspace(0, 1, 6))
  np.testing.assert_allclose(np.diff(curve.variance) / np.diff(curve.x), 0.5, rtol=1e-12)


@pytest.mark.parametrize("pareto_exponent, expected", [
    ("density", 1 + math.sqrt(5.5)), ("survival", 3.0),
], ids=["density", "survival"])
def test_pareto_isotax_example(pareto_exponent, expected):
  curve = isotaxis_curve(ParetoPrior(2.0, 0.5), 2.0, [1.5], pareto_exponent=pareto_exponent)
  assert curve.x[0] == pytest.approx(expected, rel=1e-12)
  assert not curve.exact


@pytest.mark.parametrize("prior, level, grid", [
    (ExponentialPrior(1.0), 3.0, [0.0, 0.0025, 0.01, 0.04]),
    (ParetoPrior(2.0, 0.5), 2.0, [0.0, 0.0025, 0.01, 0.04]),
    (DiscretePrior((0.0, 1.0, 3.0), (0.5, 0.3, 0.2)), 1.5, [0.0, 0.25, 1.0]),
], ids=["exponential", "pareto", "discrete"])
def test_exact_isotax_has_constant_posterior_mean(prior, level, grid):
  curve = isotaxis_curve(prior, level, grid, exact=True)
  assert curve.exact and curve.omitted == 0
  assert curve.points[0] == (level, 0.0)
  for x, variance in curve.points[1:]:
    assert posterior_mean(prior, Observation(x, math.sqrt(variance))) == pytest.approx(level, abs=1e-7)


def test_exact_exponential_matches_linear_form_far_from_zero():
  grid = np.linspace(0, 0.01, 5)
  exact = isotaxis_curve(ExponentialPrior(1.0), 3.0, grid, exact=True)
  linear = isotaxis_curve(ExponentialPrior(1.0), 3.0, grid)
  np.testing.assert_allclose(exact.x, linear.x, atol=1e-6)


def test_significance_curve():
  curve = significance_curve([0.0, 1.0, 4.0])
  assert curve[0] == (0.0, 0.0)
  assert curve[1][0] == pytest.approx(1.959964, abs=1e-6)
  assert curve[2][0] == pytest.approx(2 * 1.959964, abs=1e-6)


def test_rank_threshold():
  obs = Observations(np.arange(1.0, 11.0), np.ones(10))
  prior = NormalPrior(1.0)
  assert rank_threshold(prior, obs, 0.1) == pytest.approx(5.0)
  assert rank_threshold(prior, obs, 0.25) == pytest.approx(4.0)
  assert rank_threshold(prior, obs, 0.01) == pytest.approx(5.0)


def test_isotaxes_split_the_dataset_at_the_rank():
  rng = np.random.default_rng(8)
  n = 1000
  sigma = 0.2 + rng.exponential(0.5, n)
  obs = Observations(rng.normal(0, 1, n) + rng.normal(0, sigma), sigma)
  prior = NormalPrior(1.0)
  for alpha in (0.05, 0.01):
    level = rank_threshold(prior, obs, alpha)
    boundary = isotaxis_curve(prior, level, obs.sigma**2).x
    assert int(np.sum(obs.x >= boundary - 1e-9)) == math.ceil(alpha * n)


def test_dataset_isotaxes_drop_levels_below_one_unit():
  obs = Observations(np.linspace(-1, 3, 50), np.full(50, 0.5))
  curves = dataset_isotaxes(NormalPrior(1.0), obs, levels=[0.1, 0.02, 0.001])
  assert [c.rank_fraction for c in curves] == [0.1, 0.02]
  assert len(curves[0].points) == len(default_variance_grid(obs))
  assert curves[0].level < curves[1].level


def test_curves_to_rows():
  curve = isotaxis_curve(NormalPrior(1.0), 1.0, [0.0, 4.0], rank_fraction=0.05)
  assert curves_to_rows([curve]) == [
      {"level_C": 1.0, "rank_fraction": 0.05, "x": 1.0, "variance": 0.0},
      {"level_C": 1.0, "rank_fraction": 0.05, "x": 5.0, "variance": 4.0},
  ]
  assert curves_to_rows([curve], sigma_space=True)[1]["sigma"] == 2.0


def test_isotax_errors():
  with pytest.raises(ArgumentError):
    isotaxis_curve(NormalPrior(1.0), 1.0, [-1.0])
  with pytest.raises(ArgumentError):
    isotaxis_curve(ParetoPrior(2.0, 0.5), 1.0, [1.0], pareto_exponent="tail")
  with pytest.raises(ArgumentError):
    significance_curve([1.0], level=1.0)
  with pytest.raises(ArgumentError):
    rank_threshold(NormalPrior(1.0), Observations([1.0], [1.0]), 1.0)
  with pytest.raises(ArgumentError):
    dataset_isotaxes(NormalPrior(1.0), Observations([1.0], [1.0]), levels=[0.0])


def test_render_svg_is_deterministic(tmp_path):
  rng = np.random.default_rng(1)
  obs = Observations(rng.normal(0, 1, 200), 0.1 + rng.exponential(0.3, 200))
  prior = NormalPrior(1.0)
  curves = dataset_isotaxes(prior, obs, levels=[0.05, 0.01])
  significance = significance_curve(default_variance_grid(obs))

  first, second = tmp_path / "first.svg", tmp_path / "second.svg"
  render_svg(obs, curves, significance, first, prior_label="normal:1")
  render_svg(obs, curves, significance, second, prior_label="normal:1")
  text = first.read_text(encoding="utf-8")
  assert "<svg" in text
  assert first.read_bytes() == second.read_bytes()
