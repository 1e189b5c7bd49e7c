import os
import logging
####################################
# Load .env file
####################################

try:
    from dotenv import load_dotenv, find_dotenv

    load_dotenv(find_dotenv("./.env"))
except ImportError:
    print("dotenv not installed, skipping...")

# Define log levels dictionary
LOG_LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL
}

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
if LOG_LEVEL not in LOG_LEVELS:
    LOG_LEVEL = "INFO"

####################################
# Harness
####################################

OUTPUT_DIR = os.getenv("TOMO_OUTPUT_DIR", "./results")
RECIPES_DIR = os.getenv("RECIPES_DIR", "./pipelines")
WORKERS = int(os.getenv("TOMO_WORKERS", "4"))
DEFAULT_SEED = int(os.getenv("TOMO_SEED", "7"))

####################################
# Numerics
####################################

# "aligned" puts vertex 1 on b1r; "canonical" uses (1,1,1)/sqrt(3) and its sign flips
TETRAHEDRON = os.getenv("TOMO_TETRAHEDRON", "aligned")

# C(N+15, 15) grows fast, two-qubit enumeration goes to Monte Carlo above this
PATTERN_CAP = int(os.getenv("TOMO_PATTERN_CAP", "20000000"))

GRID_RESOLUTION = int(os.getenv("TOMO_GRID_RESOLUTION", "64"))
THRESHOLD_DELTA = float(os.getenv("TOMO_THRESHOLD_DELTA", "3.0"))

FIT_NMIN = int(os.getenv("TOMO_FIT_NMIN", "10"))
FIT_NMAX = int(os.getenv("TOMO_FIT_NMAX", "150"))

ASYMPTOTE_EVENTS = int(os.getenv("TOMO_ASYMPTOTE_EVENTS", "500000"))
