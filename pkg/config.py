"""
Configuration module for the swarm encapsulation simulator.
Loads environment variables that tune batch execution, numerics and output.
"""

import os
import logging
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Matplotlib is chatty about font discovery at INFO level
logging.getLogger("matplotlib").setLevel(logging.WARNING)
logging.getLogger("PIL").setLevel(logging.WARNING)

# Log level for the shared logger (DEBUG shows per-step dispatch details)
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

# Parallel workers for batch runs (default to 4 if not specified)
WORKERS = int(os.getenv("WORKERS", "4"))

# Where batch summaries, sweep tables and plots are written
RESULTS_DIR = os.getenv("RESULTS_DIR", "results")

# Experiment protocol defaults
DEFAULT_T_MAX = int(os.getenv("DEFAULT_T_MAX", "4000"))
SEEDS_PER_POINT = int(os.getenv("SEEDS_PER_POINT", "50"))

# Controller resolution: candidate headings per angular range (odd, includes endpoints and midpoint)
ARGMAX_CANDIDATES = int(os.getenv("ARGMAX_CANDIDATES", "33"))

# Boundary sensing quadrature: step <= influence radius / QUADRATURE_DIVISIONS
QUADRATURE_DIVISIONS = int(os.getenv("QUADRATURE_DIVISIONS", "200"))

# Rejection sampling budgets
PLACEMENT_ATTEMPTS = int(os.getenv("PLACEMENT_ATTEMPTS", "100000"))
RESAMPLE_ATTEMPTS = int(os.getenv("RESAMPLE_ATTEMPTS", "64"))

# Progress bars for batch and sweep runs
SHOW_PROGRESS = os.getenv("SHOW_PROGRESS", "true").lower() == "true"

# Minimum samples per drift estimate before a report is considered complete
DRIFT_MIN_SAMPLES = int(os.getenv("DRIFT_MIN_SAMPLES", "1000"))

# Versions of the on-disk record formats
TRACE_SCHEMA_VERSION = 1
SUMMARY_SCHEMA_VERSION = 1

# Numerical tolerance shared by the safety oracle and the argmax tie test
SAFETY_TOLERANCE = 1e-9
