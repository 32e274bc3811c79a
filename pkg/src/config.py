"""
Configuration module for the phase-space witness toolkit.
"""
import os
import logging
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Load environment variables from .env file if it exists
load_dotenv()


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    """Read an integer setting from the environment, falling back to the default."""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw.strip())
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not an integer, using {default}")
        return default
    if value < minimum:
        logger.warning(f"Ignoring {name}={value}: must be >= {minimum}, using {default}")
        return default
    logger.info(f"Using {name}={value} from environment variable")
    return value


def _env_float(name: str, default: float, positive: bool = True) -> float:
    """Read a float setting from the environment, falling back to the default."""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = float(raw.strip())
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not a number, using {default}")
        return default
    if positive and not value > 0:
        logger.warning(f"Ignoring {name}={value}: must be positive, using {default}")
        return default
    logger.info(f"Using {name}={value} from environment variable")
    return value


# Parallelism cap for parameter sweeps
THREADS = _env_int("QPS_WITNESS_THREADS", 1)

# Supremum search and plane quadrature defaults
GRID_RADIUS = _env_float("QPS_WITNESS_GRID_RADIUS", 6.0)
GRID_POINTS = _env_int("QPS_WITNESS_GRID_POINTS", 121, minimum=2)
GRID_REFINEMENTS = _env_int("QPS_WITNESS_GRID_REFINEMENTS", 8, minimum=0)
GRID_TOLERANCE = _env_float("QPS_WITNESS_GRID_TOLERANCE", 1e-8)

# Gauss-Hermite order for Gaussian convolutions and Gaussian-weighted integrals
QUADRATURE_ORDER = _env_int("QPS_WITNESS_QUADRATURE_ORDER", 64, minimum=4)

# Photon-number truncation and the tail mass allowed beyond it
PNR_CUTOFF = _env_int("QPS_WITNESS_PNR_CUTOFF", 64)
TAIL_TOLERANCE = 1e-10

# lhs > rhs + VIOLATION_TOLERANCE counts as a violation
VIOLATION_TOLERANCE = 1e-9

# Equality tolerance of the primal feasibility LP
LP_TOLERANCE = 1e-8

# Closed forms versus their quadrature oracles
FORMULA_TOLERANCE = 1e-6

CONFIG_SCHEMA_VERSION = 1

# File paths
DATA_DIR = os.getenv(
    "QPS_WITNESS_DATA_DIR",
    os.path.join(os.path.dirname(os.path.dirname(__file__)), "data"),
)
