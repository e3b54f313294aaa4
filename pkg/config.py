# quadrature
# half-width of the integration window around x, in units of sigma
WINDOW_SIGMAS = 10.0
# relative tolerance requested from scipy quad
QUAD_EPSREL = 1e-11
# reported error above this (relative) raises NumericalFailure
QUAD_MAX_RELERR = 1e-9
QUAD_LIMIT = 200

# ranking
# units per parallel chunk in rank_units
RANK_CHUNK_SIZE = 20000

# npmle
NPMLE_GRID_SIZE = 400
NPMLE_MAX_ITERATIONS = 5000
# a fit whose steps gain less than this for NPMLE_STALL_STEPS in a row stops unconverged
NPMLE_LOGLIK_TOLERANCE = 1e-10
NPMLE_STALL_STEPS = 20
# plain EM steps before the Newton steps on the weights
NPMLE_EM_WARMUP = 50
NPMLE_WEIGHT_PRUNE = 1e-12
# directional derivative allowed above n at convergence (relative)
NPMLE_GRADIENT_TOLERANCE = 1e-7
# above this many observations the candidates use empirical quantiles of x
NPMLE_MAX_OBSERVED_CANDIDATES = 2000
# grid padding in units of max sigma
NPMLE_GRID_PADDING = 3.0

# tail mle
TAIL_QUANTILE = 0.9
TAIL_BRACKET_LOW = 1e-3
TAIL_BRACKET_FACTOR = 10.0
TAIL_SCORE_TOLERANCE = 1e-10

# isotaxes
ISOTAX_LEVELS = [0.05, 0.01, 0.001, 0.0001, 0.00001]
ISOTAX_XTOL = 1e-10
ISOTAX_GRID_POINTS = 200
SIGNIFICANCE_LEVEL = 0.95

# simulation
SIGMA_MEAN = 0.02
SIGMA_OFFSET = 0.0001
SIM_SIZES = [1000, 10000]
SIM_REPLICATES = {1000: 200, 10000: 50, 100000: 10}
SIM_SEED = 20160601

# method-of-moments variance floor
NAIVE_VARIANCE_FLOOR = 1e-12

# output float format
FLOAT_FORMAT = "%.10g"
