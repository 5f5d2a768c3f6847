"""Top-level package for sparse-modes."""

__author__ = """Jonathan Senecal"""
__email__ = "contact@jonathansenecal.com"
__version__ = "0.1.0"


from .constants import (
    DEFAULT_EPS,
    DEFAULT_HISTOGRAM_BINS,
    DEFAULT_MAX_INNER,
    DEFAULT_MAX_ITER,
    DEFAULT_OUTPUT_ROOT,
    DEFAULT_TAU,
    DEFAULT_TAU_SUPP,
)

default_settings = {
    "output_root": DEFAULT_OUTPUT_ROOT,
    "tau_supp": DEFAULT_TAU_SUPP,
    "eps": DEFAULT_EPS,
    "tau": DEFAULT_TAU,
    "max_iter": DEFAULT_MAX_ITER,
    "max_inner": DEFAULT_MAX_INNER,
    "histogram_bins": DEFAULT_HISTOGRAM_BINS,
}
