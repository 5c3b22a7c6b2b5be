"""Configuration settings for the rieszlab project."""

import logging
import os
from pathlib import Path

# --- Directory Configuration ---
OUTPUT_DIR = Path("output_runs")
CACHE_DIR = Path(".cache")

# --- Enclosure Arithmetic ---
CERTIFICATE_SLACK = 1e-12  # absolute slack on |v_jk| <= w_j w_k
TAIL_ROUNDING = 1e-12  # tail upper bounds are multiplied by 1 + TAIL_ROUNDING
DEFAULT_EPSILON = 0.1
DEFAULT_HORIZON = 1_000_000
DEFAULT_DEPTH_FACTOR = 2  # default depth = factor * horizon
DEFAULT_SCHATTEN_P = (1.0, 2.0, 4.0)
DEFAULT_GTILDE_K = 8
DEFAULT_GTILDE_N1 = 2
DEFAULT_GTILDE_LOG2 = (8, 17)
GROWTH_EXPONENT_MAX = 1.25  # doubling increments decaying slower than (log n)^-1.25 count as growth
DECAY_WINDOWS = 4

# --- Power Iteration ---
POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_MAX = 100_000

# --- Spectral Analysis ---
DEFAULT_SIZE = 400
DEFAULT_QUAD_NODES = 64
MIN_QUAD_NODES = 16
BOX_NODES_PER_SIDE = 64
BOX_PANEL_LENGTH = 4.0  # long box sides are split into panels no longer than this
CLUSTER_TOL = 1e-6
NEAR_CIRCLE_TOL = 1e-8
PAIRING_TOL = 1e-14
EIGEN_RESIDUAL_TOL = 1e-8
IDEMPOTENCY_TOL = 1e-9
AGREEMENT_TOL = 1e-8
STABILITY_TOL = 1e-6
DEFAULT_DRAWS = 20
DEFAULT_CONTOUR_CHECKS = 8
BOX_CONTOUR_MAX_SIZE = 600
MAX_SERIES_EXPONENT = 6

# --- Sweeps ---
MAX_SWEEP_CELLS = 10_000
DEFAULT_SEED = 12345

# --- Output ---
CSV_DIGITS = 17

# --- Exit Codes ---
EXIT_OK = 0
EXIT_FAILS = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_SOFTWARE = 70

MAX_WORKERS = min(8, os.cpu_count() or 1)
SWEEP_WORKERS = min(4, MAX_WORKERS)  # each cell may hold a large FFT table


# --- Logging Setup ---
def setup_logging(level=logging.INFO):
    """Configure logging for the application."""
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(message)s",
    )
    return logging.getLogger("rieszlab")


# Create logger instance
logger = setup_logging()
