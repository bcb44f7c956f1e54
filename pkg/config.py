"""
mpres Configuration Module
Settings for multi-particle resonance experiments: geometry caps, eigensolver
limits, Monte Carlo harness and logging
"""
import os
from pathlib import Path

# Base paths
BASE_DIR = Path(__file__).parent
OUT_DIR = Path(os.environ.get('MPRES_OUT_DIR', str(Path.cwd() / 'results')))
LOG_DIR = Path(os.environ.get('MPRES_LOG_DIR', str(BASE_DIR / 'logs')))

TOOL_VERSION = '1.0.0'
CONFIG_SCHEMA_VERSION = 1

# ============================================================================
# Geometry
# ============================================================================

# Permutation / bipartition enumeration is exhaustive, so N stays small
MAX_PARTICLES = int(os.environ.get('MPRES_MAX_PARTICLES', '8'))

# ============================================================================
# Hamiltonian assembly
# ============================================================================

# Largest admissible cube dimension (2L+1)^{Nd}
DIM_CAP = int(os.environ.get('MPRES_DIM_CAP', '100000'))

# Largest dimension assembled as a dense matrix (8 bytes per entry)
DENSE_CAP = int(os.environ.get('MPRES_DENSE_CAP', '10000'))

# Adds the conventional -2d diagonal per particle to the hopping term
LAPLACIAN_DIAGONAL = os.environ.get('MPRES_LAPLACIAN_DIAGONAL', 'False').lower() == 'true'

# Spot-check ||Mv - lambda v|| on the extremal eigenpairs
RESIDUAL_CHECK = os.environ.get('MPRES_RESIDUAL_CHECK', 'True').lower() == 'true'
RESIDUAL_TOLERANCE = float(os.environ.get('MPRES_RESIDUAL_TOLERANCE', '1e-8'))

# Tolerance of the spectral shift decomposition check
SHIFT_TOLERANCE = float(os.environ.get('MPRES_SHIFT_TOLERANCE', '1e-9'))

# ============================================================================
# Random field / Monte Carlo
# ============================================================================

# eta-bins with fewer draws are reported as undersampled
MIN_BIN_COUNT = int(os.environ.get('MPRES_MIN_BIN_COUNT', '200'))

# Normal quantile for the 95% Wilson score interval
WILSON_Z = float(os.environ.get('MPRES_WILSON_Z', '1.959963984540054'))

# Worker pool
WORKERS = int(os.environ.get('MPRES_WORKERS', '1'))
EXECUTOR = os.environ.get('MPRES_EXECUTOR', 'process')  # process, thread

# Default s-grid: 20 log-spaced points in [1e-3, 1e-1]
DEFAULT_S_GRID_SIZE = 20
DEFAULT_S_MIN = 1e-3
DEFAULT_S_MAX = 1e-1

# ============================================================================
# Logging
# ============================================================================

LOG_LEVEL = os.environ.get('MPRES_LOG_LEVEL', 'INFO')
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_FILE = os.environ.get('MPRES_LOG_FILE', str(LOG_DIR / 'mpres.log'))
LOG_MAX_BYTES = int(os.environ.get('MPRES_LOG_MAX_BYTES', str(10 * 1024 * 1024)))  # 10 MB
LOG_BACKUP_COUNT = int(os.environ.get('MPRES_LOG_BACKUP_COUNT', '5'))

DEBUG_MODE = os.environ.get('MPRES_DEBUG', 'False').lower() == 'true'
