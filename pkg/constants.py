import math


class Family:
  NORMAL = "normal"
  EXPONENTIAL = "exponential"
  IMPROPER_EXPONENTIAL = "improper_exponential"
  PARETO = "pareto"
  DISCRETE = "discrete"
  # ranking by x alone
  POINT = "point"

  PARAMETRIC = (NORMAL, EXPONENTIAL, PARETO)
  ALL = (NORMAL, EXPONENTIAL, IMPROPER_EXPONENTIAL, PARETO, DISCRETE)


class ParameterMode:
  OPTIMAL = "optimal"
  TAIL_MLE = "tail_mle"

  ALL = (OPTIMAL, TAIL_MLE)


# simulation true priors
DEFAULT_TAU = 1.0
DEFAULT_RATE = 1.0
DEFAULT_ALPHA = 2.0
DEFAULT_ETA = 0.5

# 90th percentiles of the default true priors
NORMAL_CUTOFF = 1.2815515655446004
EXPONENTIAL_CUTOFF = math.log(10)
PARETO_CUTOFF = math.sqrt(10) / 2

# minimum NPMLE mass near each observation is this over n
LOCAL_MASS = 1 - math.exp(-0.5)

# two-sided 95% standard normal quantile
Z_95 = 1.959963984540054
