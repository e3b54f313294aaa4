"""Adaptive quadrature wrappers that turn scipy's error estimates into errors."""
import math
import warnings
import numpy as np
from scipy import integrate
from . import config
from .errors import NumericalFailure, DivergenceError


def integrate_checked(func, lo, hi, label="integral", epsrel=None, max_relerr=None, floor=0.0, points=None):
  """Integrate a scalar function with `scipy.integrate.quad`.

  Raises NumericalFailure when the reported absolute error exceeds
  `max_relerr * |value| + floor`.
  """
  epsrel = config.QUAD_EPSREL if epsrel is None else epsrel
  max_relerr = config.QUAD_MAX_RELERR if max_relerr is None else max_relerr
  kwargs = {"epsabs": 0.0, "epsrel": epsrel, "limit": config.QUAD_LIMIT}
  inner = sorted({p for p in points if lo < p < hi}) if points is not None else []
  if inner and math.isfinite(lo) and math.isfinite(hi):
    kwargs["points"] = inner
  with warnings.catch_warnings():
    warnings.simplefilter("ignore", integrate.IntegrationWarning)
    value, abserr = integrate.quad(func, lo, hi, **kwargs)

  if not math.isfinite(value):
    raise NumericalFailure(f"{label}: non-finite value {value}")
  if abserr > max_relerr * abs(value) + floor:
    raise NumericalFailure(f"{label}: error estimate {abserr:.3g} exceeds tolerance for value {value:.6g}")
  return value


def tail_integral(func, a, label="tail integral", scale=1.0):
  """∫_a^∞ func, with a divergence check on the far tail.

  `scale` is a typical length of the integrand; the tail test evaluates
  x·func(x) far beyond it.
  """
  far = max(abs(a), scale, 1.0) * 1e6
  try:
    value = integrate_checked(func, a, math.inf, label=label, floor=1e-300)
  except NumericalFailure as e:
    if _heavy_tail(func, far):
      raise DivergenceError(f"{label}: integrand does not decay ({e})")
    raise
  if _heavy_tail(func, far, reference=value):
    raise DivergenceError(f"{label}: integrand decays too slowly for a finite integral")
  return value


def _heavy_tail(func, far, reference=None):
  with np.errstate(all="ignore"):
    edge = abs(far * func(far))
  if not math.isfinite(edge):
    return True
  if reference is None:
    return edge > 1e-8
  return edge > 1e-6 * max(abs(reference), 1e-300)


def integrate_vector(func, lo, hi, epsabs=1e-13, epsrel=1e-12, label="vector integral"):
  """Integrate a vector-valued function with `scipy.integrate.quad_vec`."""
  value, abserr, info = integrate.quad_vec(func, lo, hi, epsabs=epsabs, epsrel=epsrel, norm="max", full_output=True)
  if not info.success or not np.all(np.isfinite(value)):
    raise NumericalFailure(f"{label}: {info.message}")
  return value
