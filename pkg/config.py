"""
GROWTHLAB - CONFIGURATION
Settings come from the environment (or a local .env file), with the
defaults below.
"""

import os

from dotenv import load_dotenv

load_dotenv()


def _int_env(name, default):
    value = os.environ.get(name)
    if value is None or value.strip() == '':
        return default
    return int(value)


# ============================================================
# RUNTIME
# ============================================================

THREADS = _int_env('GROWTHLAB_THREADS', 1)
LOG_LEVEL = os.environ.get('GROWTHLAB_LOG_LEVEL', 'WARNING').upper()
REPORT_DIR = os.environ.get('GROWTHLAB_REPORT_DIR', 'logs/')
CACHE_DIR = os.environ.get('GROWTHLAB_CACHE_DIR', 'models/')
PORT = _int_env('PORT', 5000)

# ============================================================
# COMPUTATION CAPS
# ============================================================

KB_MAX_RULES = _int_env('GROWTHLAB_KB_MAX_RULES', 20000)
KB_MAX_LEN = _int_env('GROWTHLAB_KB_MAX_LEN', 64)
BFS_MEMORY_CAP = _int_env('GROWTHLAB_BFS_CAP', 10 ** 7)
MAX_POLY_DEGREE = _int_env('GROWTHLAB_MAX_POLY_DEGREE', 64)

# Defaults shared by the CLI and the API
DEFAULT_N_MAX = 20
DEFAULT_RANDOM_SEED = 42
