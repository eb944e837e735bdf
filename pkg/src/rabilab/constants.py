"""
Constants used throughout the rabi-lab tool
"""

# Structure-flag checks on OperatorMatrix
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

# Fock-space truncation control
DEFAULT_INITIAL_DIM = 32
DEFAULT_GROWTH_FACTOR = 1.5
DEFAULT_MAX_DIM = 2048
DEFAULT_LEVEL_TOL = 1e-10
MIN_INITIAL_DIM = 8

# n >= 16 (g/omega_c)^2 + 60
HEURISTIC_SLOPE = 16.0
HEURISTIC_OFFSET = 60

# Parity labelling
PARITY_EPS = 1e-6
SECTOR_PLUS = "plus"
SECTOR_MINUS = "minus"
SECTOR_MIXED = "mixed"

# Heat kernel for E+/E-
DEFAULT_BETA = 10.0
DEFAULT_BETA_GROWTH = 2.0
DEFAULT_HK_REL_TOL = 1e-10
MAX_BETA = 1e15
MIN_OVERLAP = 1e-12

# Instanton action
ACTION_WARN_RTOL = 1e-9
G_BOUND_SLACK = 0.02

# LMT2 default schedule: omega_a(r) = omega_a(0) (1 - r), g(r) = g_max r
DEFAULT_LMT2_STEPS = 61
DEFAULT_LMT2_G_MAX = 3.0

# Position-grid oracle
MIN_GRID_POINTS = 64
DEFAULT_GRID_POINTS = 1024
DEFAULT_STENCIL_ORDER = 2
# ground-state components count as nodeless above -NODE_TOL
NODE_TOL = 1e-12

# Command line / output
CONFIG_ENV_VAR = "RABI_LAB_CONFIG"
CSV_FLOAT_FORMAT = ".12g"
MANIFEST_SUFFIX = "manifest.json"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONVERGENCE = 3
EXIT_NO_SUSY = 4

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
