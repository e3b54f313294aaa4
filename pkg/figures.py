import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from . import config
from .logger import create_logger
from .posterior import as_observations
from .translate import _t

logger = create_logger(__name__)

# stable element ids so identical inputs give identical files
matplotlib.rcParams["svg.hashsalt"] = "rankprior"


def render_svg(obs, curves, significance, path, prior_label="", significance_level=config.SIGNIFICANCE_LEVEL):
  """Scatter of the positive estimates against σ² with isotaxes and the significance curve."""
  observations = as_observations(obs)
  positive = observations.x > 0
  x, variance = observations.x[positive], observations.sigma[positive]**2

  fig, ax = plt.subplots(figsize=(8, 6))
  try:
    ax.scatter(x, variance, s=4, color="grey", alpha=0.6, linewidths=0)
    for curve in curves:
      percent = 100 * curve.rank_fraction if curve.rank_fraction is not None else None
      label = _t("figure.level", percent=percent) if percent is not None else f"C={curve.level:.4g}"
      ax.plot(curve.x, curve.variance, linewidth=1.2, label=label)
    if significance:
      sig = np.asarray(significance)
      ax.plot(sig[:, 0], sig[:, 1], color="blue", linestyle="--", linewidth=1.2,
              label=_t("figure.significance", percent=100 * significance_level))

    if x.size:
      ax.set_xlim(0, 1.05 * float(x.max()))
      ax.set_ylim(0, 1.05 * float(variance.max()) or 1.0)
    ax.set_xlabel(_t("figure.xlabel"))
    ax.set_ylabel(_t("figure.ylabel"))
    ax.set_title(_t("figure.title", prior=prior_label, n=len(observations)))
    ax.legend(loc="upper left", fontsize="small")
    fig.savefig(path, format="svg", metadata={"Date": None})
  finally:
    plt.close(fig)
  logger.info(f"render_svg:written:{path}")
  return path
