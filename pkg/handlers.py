"""Subcommand implementations; each takes the parsed arguments and returns an exit code."""
import sys
from . import config
from .constants import Family, ParameterMode
from .datasets import ingest, naive_normal_variance, write_table
from .errors import ArgumentError
from .fetch import fetch
from .figures import render_svg
from .isotax import curves_to_rows, dataset_isotaxes, default_variance_grid, significance_curve
from .logger import create_logger
from .loss_theory import loss_table
from .npmle import fit_npmle
from .posterior import RankedList, posterior_means
from .priors import make_prior, parse_prior
from .simulation import (
    SimulationConfig, observed_cell_losses, prediction_agreement, report, run_study, study_configs, study_tables,
    theoretical_cell_predictions,
)
from .tail_mle import TailSample, empirical_cutoff, fit_tail
from .translate import _t

logger = create_logger(__name__)

NPMLE = "npmle"
FIT_TAIL = "fit-tail:"


def emit(text, path):
  if path is None:
    sys.stdout.write(text)
  else:
    with open(path, "w", encoding="utf-8", newline="") as file:
      file.write(text)
    logger.info(_t("cli.written", path=path))


def load_observations(args):
  result = ingest(args.input, args.input_format, args.sigma_offset)
  for line, reason in result.rejects:
    logger.warning(_t("cli.rejected", line=line, reason=reason))
  if result.rejects:
    logger.warning(_t("cli.rejects_total", count=len(result.rejects)))
  return result.observations


def fit_family(family, observations, tail_quantile, eta):
  if family == NPMLE:
    return fit_npmle(observations)
  if family not in Family.PARAMETRIC:
    raise ArgumentError(f"cannot fit family {family!r}; choose normal, exponential, pareto or npmle")
  a = empirical_cutoff(observations, tail_quantile)
  parameter = fit_tail(family, TailSample.from_observations(observations, a))
  logger.info(f"fit_family:{family}:cutoff:{a:.6g}:parameter:{parameter:.10g}")
  return make_prior(family, parameter, eta)


def resolve_prior(text, observations, tail_quantile, eta):
  """`--prior` grammar: JSON, family:param[,eta], npmle or fit-tail:<family>."""
  text = text.strip()
  if text == NPMLE:
    return fit_npmle(observations)
  if text.startswith(FIT_TAIL):
    return fit_family(text[len(FIT_TAIL):], observations, tail_quantile, eta)
  return parse_prior(text)


def on_rank(args):
  observations = load_observations(args)
  prior = resolve_prior(args.prior, observations, args.tail_quantile, args.eta)
  scores = posterior_means(prior, observations)
  ranked = RankedList.from_scores(scores)
  ids = observations.ids or [str(i + 1) for i in range(len(observations))]
  rows = [{
      "id": ids[unit],
      "x": observations.x[unit],
      "sigma": observations.sigma[unit],
      "posterior_mean": scores[unit],
      "rank": position + 1,
  } for position, unit in enumerate(ranked.order)]
  emit(write_table(rows, table_format=args.format), args.out)
  return 0


def _levels(text):
  if not text:
    return config.ISOTAX_LEVELS
  try:
    return [float(v) for v in text.split(",")]
  except ValueError:
    raise ArgumentError(f"levels must be comma-separated fractions, got {text!r}")


def on_isotax(args):
  observations = load_observations(args)
  prior = resolve_prior(args.prior, observations, args.tail_quantile, args.eta)
  logger.info(_t("cli.naive_variance", value=naive_normal_variance(observations)))
  grid = default_variance_grid(observations)
  curves = dataset_isotaxes(prior, observations, _levels(args.levels), grid, exact=args.exact)
  emit(write_table(curves_to_rows(curves, sigma_space=args.sigma_space), table_format=args.format), args.out)

  if args.svg:
    significance = significance_curve(grid, config.SIGNIFICANCE_LEVEL)
    render_svg(observations, curves, significance, args.svg, prior_label=prior.family)
  return 0


def on_loss_table(args):
  rows = loss_table(args.cutoff_quantile)
  emit(write_table(rows, table_format=args.format), args.out)
  return 0


def simulation_base(args):
  base = SimulationConfig.load(args.config) if args.config else SimulationConfig()
  changes = {}
  if args.seed is not None:
    changes["seed"] = args.seed
  if args.sigma_mean is not None:
    changes["sigma_mean"] = args.sigma_mean
  return SimulationConfig.from_dict({**base.to_dict(), **changes})


def on_simulate(args):
  base = simulation_base(args)
  sizes = [int(n) for n in args.sizes.split(",")] if args.sizes else [base.n] if args.config else None
  modes = ParameterMode.ALL if args.mode == "all" else (args.mode,)
  if args.true_families:
    families = args.true_families.split(",")
  else:
    families = (base.true_family,) if args.config else Family.PARAMETRIC
  configs = list(study_configs(base, sizes, modes, families, args.replicates))
  results = run_study(configs)

  losses, parameters = study_tables(results)
  emit(write_table(losses, table_format=args.format), args.out)
  if args.params_out:
    emit(write_table(parameters, table_format=args.format), args.params_out)

  agreement = None
  n = configs[0].n
  observed = observed_cell_losses(results, n)
  if len(observed) >= 3:
    agreement = prediction_agreement(theoretical_cell_predictions(n, base.sigma_mean, base.sigma_offset), observed)
  if not args.quiet:
    print(report(results, base, agreement), file=sys.stderr)
  return 0


def on_fit_prior(args):
  observations = load_observations(args)
  prior = fit_family(args.family, observations, args.tail_quantile, args.eta)
  emit(prior.to_json() + "\n", args.out)
  return 0


def on_fetch(args):
  path = fetch(args.name, args.data_dir)
  logger.info(_t("cli.fetched", name=args.name, path=path))
  return 0
