"""
Constants for the sparse-modes solvers, samplers and file formats
"""

# Numerical defaults
DEFAULT_EPS = 1e-8
DEFAULT_TAU = 1e-6
DEFAULT_MAX_ITER = 100
DEFAULT_MAX_INNER = 10000

# Group lasso convergence certificate: KKT residuals within this multiple of eps
KKT_TOLERANCE_FACTOR = 10.0

# Relative group-norm threshold below which a location is not part of a support
DEFAULT_TAU_SUPP = 1e-8

DEFAULT_HISTOGRAM_BINS = 30

# Standardized lower bound beyond which truncated Gaussians use exponential rejection
TRUNCNORM_TAIL_CUTOFF = 5.0

# Synthetic designs: Toeplitz correlations of the two column blocks
EXAMPLE_RHO_WEAK = 0.5
EXAMPLE_RHO_STRONG = 0.95
EXAMPLE_NOISE_LEVEL = 0.2

# Output locations
DEFAULT_OUTPUT_ROOT = "runs"
SETTINGS_ENV_PREFIX = "SPARSEMODES_"

# On-disk formats
CSV_FLOAT_FORMAT = "%.17g"
PROBLEM_MANIFEST = "problem.json"
DESIGN_FILE = "G.csv"
MEASUREMENT_FILE = "M.csv"
TRUTH_FILE = "truth.json"
RUN_MANIFEST = "manifest.json"
