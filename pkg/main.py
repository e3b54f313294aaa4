import argparse
from . import handlers
from .constants import DEFAULT_ETA, Family, ParameterMode
from . import config
from .errors import (
    ArgumentError, DivergenceError, EstimationFailure, IngestError, NonConvergence, NumericalFailure, PriorDomainError,
    RankPriorError,
)
from .fetch import SOURCES, FetchError
from .logger import create_logger, set_quiet
from .translate import _t

logger = create_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

USAGE_ERRORS = (ArgumentError, PriorDomainError, IngestError, FetchError, OSError)
NUMERICAL_ERRORS = (NumericalFailure, DivergenceError, EstimationFailure, NonConvergence)


class ArgumentParser(argparse.ArgumentParser):
  """Reports bad flags as ArgumentError so they share the usage exit code."""

  def error(self, message):
    raise ArgumentError(message)


def _common(parser):
  parser.add_argument("--seed", type=int, default=None, help="random seed (only simulate draws random numbers)")
  parser.add_argument("--out", default=None, help="output file (default: stdout)")
  parser.add_argument("--format", choices=("csv", "json"), default="csv")


def _data_input(parser):
  parser.add_argument("--input", required=True, help="dataset file (csv, tsv or json)")
  parser.add_argument("--input-format", choices=("auto", "estimate", "odds_ratio"), default="auto")
  parser.add_argument("--tail-quantile", type=float, default=config.TAIL_QUANTILE)
  parser.add_argument("--eta", type=float, default=DEFAULT_ETA, help="pareto lower bound for fitted priors")
  parser.add_argument("--sigma-offset", type=float, default=0.0, help="added to every standard error on ingest")


def build_parser():
  parser = ArgumentParser(prog="rankprior", description="Empirical-Bayes ranking by posterior mean")
  parser.add_argument("--quiet", action="store_true", help="only warnings and errors")
  commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

  rank = commands.add_parser("rank", help="rank units by posterior mean")
  _common(rank)
  _data_input(rank)
  rank.add_argument("--prior", required=True, help="JSON, family:param[,eta], npmle or fit-tail:<family>")
  rank.set_defaults(func=handlers.on_rank)

  isotax = commands.add_parser("isotax", help="top-fraction isotaxes of a dataset")
  _common(isotax)
  _data_input(isotax)
  isotax.add_argument("--prior", required=True)
  isotax.add_argument("--levels", default=None, help="comma-separated rank fractions")
  isotax.add_argument("--exact", action="store_true", help="root-find on the exact posterior mean")
  isotax.add_argument("--sigma-space", action="store_true", help="emit sigma instead of variance")
  isotax.add_argument("--svg", default=None, help="also draw the figure to this file")
  isotax.set_defaults(func=handlers.on_isotax)

  losses = commands.add_parser("loss-table", help="optimal parameters, losses and sensitivities")
  _common(losses)
  losses.add_argument("--cutoff-quantile", type=float, default=config.TAIL_QUANTILE)
  losses.set_defaults(func=handlers.on_loss_table)

  simulate = commands.add_parser("simulate", help="run the simulation study")
  _common(simulate)
  simulate.add_argument("--config", default=None, help="JSON or YAML simulation settings")
  simulate.add_argument("--sizes", default=None, help="comma-separated dataset sizes")
  simulate.add_argument("--replicates", type=int, default=None)
  simulate.add_argument("--sigma-mean", type=float, default=None)
  simulate.add_argument("--mode", choices=ParameterMode.ALL + ("all",), default="all")
  simulate.add_argument("--true-families", default=None, help="comma-separated subset of normal,exponential,pareto")
  simulate.add_argument("--params-out", default=None, help="file for the fitted-parameter table")
  simulate.set_defaults(func=handlers.on_simulate)

  fit = commands.add_parser("fit-prior", help="fit a prior to a dataset")
  _common(fit)
  _data_input(fit)
  fit.add_argument("--family", choices=Family.PARAMETRIC + (handlers.NPMLE,), required=True)
  fit.set_defaults(func=handlers.on_fit_prior)

  download = commands.add_parser("fetch", help="download a public dataset source")
  download.add_argument("name", choices=sorted(SOURCES))
  download.add_argument("--data-dir", default=None)
  download.set_defaults(func=handlers.on_fetch)
  return parser


def main(argv=None):
  try:
    args = build_parser().parse_args(argv)
  except ArgumentError as e:
    logger.error(_t("cli.usage_error", error=e))
    return EXIT_USAGE

  set_quiet(args.quiet)
  try:
    return args.func(args)
  except NUMERICAL_ERRORS as e:
    logger.error(_t("cli.numerical_error", error=e))
    return EXIT_NUMERICAL
  except USAGE_ERRORS as e:
    logger.error(_t("cli.usage_error", error=e))
    return EXIT_USAGE
  except RankPriorError as e:
    logger.error(f"main:error:{e}")
    return EXIT_USAGE
