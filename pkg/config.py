# fpu_lab/config.py

import os

# --- Output Location ---

# Output directory: --out flag first, then this environment variable, then the default below.
OUTPUT_DIR_ENV_VAR = "FPU_LAB_OUT"
DEFAULT_OUTPUT_DIR = os.path.join(os.getcwd(), "fpu_lab_output")

# --- Application Settings ---
APP_NAME = "fpu-lab"
APP_VERSION = "1.0.0"

# --- Model Defaults (alpha-FPU chain, N = 512) ---
DEFAULT_N_SITES = 512
DEFAULT_ALPHA = 0.25
DEFAULT_BETA = 0.0
DEFAULT_INITIAL_MODE = 1
DEFAULT_AMPLITUDE = 40.0

# --- Integration Defaults ---
DEFAULT_INTEGRATOR = "leapfrog"
DEFAULT_STEP_LEAPFROG = 0.02
DEFAULT_STEP_SPECTRAL = 1.0
DEFAULT_T_END = 1.0e4
# Leap-frog is linearly stable for h * omega_max < 2 and omega_max = 2 on this chain.
LEAPFROG_MAX_STEP = 1.0

# --- Estimator / Sampling Defaults ---
DEFAULT_PACKET_SIZE = 8
DEFAULT_SAMPLES_PER_DECADE = 20
# T_eq is the onset of a run of samples at or above this fraction of the asymptote ...
EQUILIBRIUM_THRESHOLD_FRACTION = 0.9
# ... lasting at least this many decades of time.
EQUILIBRIUM_MIN_SPAN_DECADES = 0.5

# --- Sweep Defaults ---
DEFAULT_SWEEP_AMPLITUDES = (5.0, 10.0, 20.0, 30.0, 35.0, 40.0)
DEFAULT_SWEEP_WORKERS = 1

# --- Numerical Tolerances ---
# Relative Hermitian-symmetry defect accepted by from_modes.
HERMITIAN_TOLERANCE = 1e-12
# Total energy must stay within these relative drifts for the runner to report "ok".
LEAPFROG_DRIFT_TOLERANCE = 1e-3
SPECTRAL_DRIFT_TOLERANCE = 1e-4

# --- Output Formatting ---
# 17 significant digits render every 64-bit float losslessly.
FLOAT_FORMAT = "%.17g"
SERIES_COLUMNS = ("t", "n_eff_inst", "n_eff_packet", "e_total", "drift")
SWEEP_SUMMARY_COLUMNS = ("amplitude", "t_eq_inst", "t_eq_packet", "max_drift")

# --- Exit Codes ---
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_BLOWUP = 4
EXIT_CHECK_FAILED = 5

# --- Logging Settings ---
# Logging level for the application. Options: DEBUG, INFO, WARNING, ERROR, CRITICAL
LOGGING_LEVEL = "INFO"
LOGGING_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
