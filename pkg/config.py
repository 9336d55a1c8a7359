# config.py
import os
from dotenv import load_dotenv

load_dotenv()

# --- Library Version ---
__version__ = "0.4.0"
REPORT_VERSION = __version__

# --- Fiber Algebra ---
MAX_DIMENSION = int(os.getenv("GBC_MAX_DIMENSION", 8))
EXACT_TOL = 1e-12
SOLVE_TOL = 1e-10
SYMMETRY_TOL = 1e-10

# --- Finite Differences ---
# step = eps**exponent * (1 + |x_i|) per coordinate
FD_FIRST_STEP_EXPONENT = 1.0 / 3.0
FD_SECOND_STEP_EXPONENT = 1.0 / 6.0
FUNCTIONAL_FD_STEPS = (1e-3, 5e-4)
CURVATURE_VARIATION_FD_STEP = 1e-3

# --- Quadrature ---
QUAD_ORDER = int(os.getenv("GBC_QUAD_ORDER", 16))
POLE_MARGIN = 1e-3

# --- Verification Tolerances ---
MAIN_THEOREM_TOL = 1e-3
CURVATURE_VARIATION_TOL = 1e-4
OPERATOR_TOL = 1e-6
GAUSS_BONNET_TOL = 1e-3
CLASSICAL_GB_TOL = 1e-6
VOLUME_TOL = 1e-6
EINSTEIN_TOL = 1e-8
RELATIVE_FLOOR = 1e-8

# --- Suites ---
DEFAULT_SEED = 0
IDENTITY_TRIALS = 100
GB_AMPLITUDE = 0.05

# --- Runtime ---
_threads = os.getenv("GBC_THREADS")
THREADS = int(_threads) if _threads else None
LOG_LEVEL = os.getenv("GBC_LOG_LEVEL", "INFO").upper()
