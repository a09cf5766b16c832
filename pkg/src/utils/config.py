"""Application configuration constants."""

APP_VERSION = "0.1.0"
APP_NAME = "crb-lpm"

# Physical constants
SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Experiment defaults (monostatic MIMO radar, single target)
DEFAULT_N_TX = [16]
DEFAULT_N_RX = 9
DEFAULT_N_BLOCKS = 1024
DEFAULT_THETA_DEG = 45.0
DEFAULT_BETA = 1.0 + 0.0j
DEFAULT_NOISE_DBM = 0.0
DEFAULT_SNR_DB = 10.0
DEFAULT_VELOCITY_MPS = 8.0

# Never stated for the experiments; only affects the Doppler phase ramp
DEFAULT_CARRIER_HZ = 24e9
DEFAULT_BLOCK_PERIOD_S = 1e-6

# Linear-proximal solver
DEFAULT_RHO = 5.0
DEFAULT_TOLERANCE = 1e-5
DEFAULT_MAX_ITERS = 1000
DEFAULT_TOLERANCE_MODE = "relative"
DEFAULT_PENALTY_SCALING = "curvature"
RHO_BACKOFF_CAP = 2 ** 10

# Convergence-ratio diagnostic
RATIO_WINDOW = 10
REFINE_TOLERANCE = 1e-12
REFINE_MAX_ITERS = 20000

# Projected-gradient baseline
DEFAULT_PGD_STEP = 1.0
DEFAULT_PGD_BACKTRACK = 0.5
DEFAULT_PGD_ARMIJO = 1e-4
DEFAULT_PGD_TOLERANCE = 1e-8
DEFAULT_PGD_MAX_ITERS = 2000
PGD_MAX_HALVINGS = 60

# Numerical thresholds
SINGULAR_FIM_RTOL = 1e-12
FD_STEP = 1e-6

# Experiment harness
DEFAULT_TRIALS = 100
DEFAULT_SEED = 0
INIT_PERTURBATION = 0.1
SOLVERS = ["lpm", "pgd", "both"]
OUTPUT_FORMATS = ["csv", "json", "xlsx"]
RECORD_COLUMNS = [
    "solver",
    "n_tx",
    "power_dbm",
    "crb_trace",
    "iterations",
    "wall_time_ms",
    "trial",
    "seed",
    "status",
]

# Environment variables with this prefix override config-file keys
ENV_PREFIX = "CRB_LPM_"

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_CHECK_FAILED = 3
