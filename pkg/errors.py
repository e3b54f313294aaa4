class RankPriorError(Exception):
  """Base class for every error raised by the package."""


class ArgumentError(RankPriorError, ValueError):
  pass


class PriorDomainError(RankPriorError, ValueError):
  """The prior cannot answer this query (zero density, improper, discrete)."""


class NumericalFailure(RankPriorError):
  def __init__(self, message, index=None):
    super().__init__(message if index is None else f"{message} (unit {index})")
    self.index = index


class DivergenceError(RankPriorError):
  pass


class EstimationFailure(RankPriorError):
  def __init__(self, message, approximation=None):
    super().__init__(message)
    self.approximation = approximation


class NonConvergence(RankPriorError):
  """NPMLE stopped at max_iterations; `fit` holds the best iterate."""

  def __init__(self, message, fit=None):
    super().__init__(message)
    self.fit = fit


class IngestError(RankPriorError):
  def __init__(self, message, rejects=None):
    super().__init__(message)
    self.rejects = rejects or []
