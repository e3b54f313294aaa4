import math
import numpy as np
import pytest
from scipy import stats
from . import env
from .constants import LOCAL_MASS
from .errors import ArgumentError, NonConvergence
from .npmle import (
    NpmleConfig, candidate_grid, combined_robustness_bound, figure_dataset, fit_npmle, gradient_certificate,
    posterior_shift_bound, local_mass, local_mass_floor, local_mass_halfwidth, marginal_loglik, run_npmle,
)
from .posterior import Observations, posterior_means
from .priors import DiscretePrior, ExponentialPrior, NormalPrior


def random_dataset(seed, n):
  rng = np.random.default_rng(seed)
  thetas = rng.choice([-2.0, 0.0, 1.5], size=n) + rng.normal(0, 0.3, size=n)
  sigma = rng.uniform(0.5, 2.0, size=n)
  return Observations(rng.normal(thetas, sigma), sigma)


def check_fit(obs):
  n = len(obs)
  fit = run_npmle(obs)
  assert fit.converged
  trace = np.array(fit.loglik_trace)
  assert np.all(np.diff(trace) >= -1e-9 * np.abs(trace[1:]))
  assert fit.gradient_gap <= 1e-6

  for x, sigma in zip(obs.x, obs.sigma):
    assert local_mass(fit.prior, x, local_mass_halfwidth(n, sigma)) >= local_mass_floor(n) * (1 - 1e-6)

  deviation = np.abs(posterior_means(fit.prior, obs) - obs.x)
  bounds = np.array([combined_robustness_bound(n, sigma) for sigma in obs.sigma])
  assert np.all(deviation <= bounds + 1e-9)


@pytest.mark.parametrize("seed, n", [(s, n) for s in range(6) for n in (5, 50)])
def test_npmle_properties(seed, n):
  check_fit(random_dataset(seed, n))


@pytest.mark.skipif(not env.RANKPRIOR_SLOW, reason="set RANKPRIOR_SLOW=1 for the full property suite")
@pytest.mark.parametrize("seed", range(200))
def test_npmle_properties_full(seed):
  n = (5, 50, 500)[seed % 3]
  check_fit(random_dataset(1000 + seed, n))


def test_fit_beats_its_own_candidates():
  obs = random_dataset(11, 50)
  fit = run_npmle(obs)
  for value in (fit.candidates[0], fit.candidates[len(fit.candidates) // 2]):
    point = DiscretePrior((float(value),), (1.0,))
    assert marginal_loglik(point, obs) <= fit.loglik + 1e-9


def test_certificate_of_converged_fit():
  obs = random_dataset(3, 50)
  fit = run_npmle(obs)
  assert gradient_certificate(fit.prior, obs, fit.candidates) == pytest.approx(fit.gradient_gap)


def test_input_validation():
  with pytest.raises(ArgumentError):
    fit_npmle(Observations([], []))
  with pytest.raises(ArgumentError):
    fit_npmle(Observations([1.0, 2.0], [1.0, 0.0]))
  with pytest.raises(ArgumentError):
    NpmleConfig(loglik_tolerance=0)
  with pytest.raises(ArgumentError):
    NpmleConfig(em_warmup=-1)


def test_strict_mode_raises_with_best_fit():
  with pytest.raises(NonConvergence) as error:
    fit_npmle(random_dataset(2, 50), NpmleConfig(max_iterations=1), strict=True)
  assert error.value.fit.iterations == 1
  assert not error.value.fit.converged


def test_candidate_grid_uses_quantiles_for_large_inputs():
  obs = Observations(np.linspace(0, 1, 50), np.ones(50))
  grid = candidate_grid(obs, NpmleConfig(grid_size=2, max_observed_candidates=10))
  assert len(grid) <= 12
  assert grid.min() == pytest.approx(-3.0)
  assert grid.max() == pytest.approx(4.0)


def test_marginal_loglik_closed_forms():
  obs = Observations([0.0], [1.0])
  assert marginal_loglik(NormalPrior(1.0), obs) == pytest.approx(-0.5 * math.log(4 * math.pi), rel=1e-12)
  x, sigma, rate = 1.0, 0.5, 1.0
  expected = math.log(rate) + rate**2 * sigma**2 / 2 - rate * x + stats.norm.logcdf(x / sigma - rate * sigma)
  assert marginal_loglik(ExponentialPrior(rate), Observations([x], [sigma])) == pytest.approx(expected, rel=1e-8)


def test_local_mass_uses_open_interval():
  prior = DiscretePrior((0.0, 1.0, 2.0), (0.2, 0.3, 0.5))
  assert local_mass(prior, 1.0, 1.0) == pytest.approx(0.3)
  assert local_mass(prior, 1.0, 1.5) == pytest.approx(1.0)


def test_robustness_bounds():
  assert posterior_shift_bound(math.e**2, 0.5, 1.0) == pytest.approx(2.5)
  assert combined_robustness_bound(2, 1.0) == pytest.approx(3.22216, abs=1e-4)
  assert local_mass_floor(10) == pytest.approx(LOCAL_MASS / 10)
  with pytest.raises(ArgumentError):
    posterior_shift_bound(1.0, 0.5, 1.0)
  with pytest.raises(ArgumentError):
    combined_robustness_bound(1, 1.0)


def test_figure_dataset_is_seeded():
  thetas, obs = figure_dataset(n=100, seed=4)
  again, obs_again = figure_dataset(n=100, seed=4)
  assert np.array_equal(thetas, again)
  assert np.array_equal(obs.x, obs_again.x)
  assert len(obs) == 100 and np.all(obs.sigma > 0)


def test_single_observation_gives_point_mass():
  obs = Observations([2.0], [0.5])
  fit = run_npmle(obs)
  assert fit.converged
  support, weights = fit.prior._arrays
  assert support[np.argmax(weights)] == 2.0
  assert weights.max() >= 0.999
  assert posterior_means(fit.prior, obs)[0] == pytest.approx(2.0, abs=1e-4)


def test_two_separated_observations_split_the_mass():
  fit = run_npmle(Observations([-5.0, 5.0], [0.1, 0.1]))
  support, weights = fit.prior._arrays
  assert np.all(np.minimum(np.abs(support + 5), np.abs(support - 5)) <= 0.1)
  assert weights[support < 0].sum() == pytest.approx(0.5, abs=0.01)
  assert weights[support > 0].sum() == pytest.approx(0.5, abs=0.01)


def test_fit_dominates_the_generating_prior():
  _, obs = figure_dataset(n=500, seed=0)
  fit = run_npmle(obs)
  generating = np.sum(stats.norm.logpdf(obs.x, -2.3, np.sqrt(1.0 + obs.sigma**2)))
  assert fit.converged
  assert fit.loglik >= generating


def test_shift_bound_holds_for_random_discrete_priors():
  rng = np.random.default_rng(17)
  for _ in range(300):
    k = rng.integers(1, 8)
    prior = DiscretePrior.normalized(np.sort(rng.uniform(-5, 5, size=k)), rng.uniform(0.01, 1.0, size=k))
    x, sigma, a = rng.uniform(-5, 5), rng.uniform(0.1, 2.0), rng.uniform(0.01, 2.0)
    support, weights = prior._arrays
    mass = float(weights[np.abs(support - x) <= a].sum())
    if mass == 0:
      continue
    r = max(1 / mass - 1, math.e)
    shift = abs(posterior_means(prior, Observations([x], [sigma]))[0] - x)
    assert shift <= posterior_shift_bound(r, a, sigma) + 1e-9


def test_newton_steps_reach_the_certificate_quickly():
  obs = random_dataset(5, 50)
  fit = run_npmle(obs)
  assert fit.converged and fit.iterations < 1000
  em_only = run_npmle(obs, NpmleConfig(em_warmup=1000, max_iterations=1000))
  assert fit.loglik >= em_only.loglik - len(obs) * 1e-7
