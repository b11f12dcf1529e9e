import os
import configparser
import logging

# Numerical defaults
DEFAULT_QI_TOL = 1e-9
DEFAULT_COND_TOL = 1e-12
DEFAULT_RANK_TOL = 1e-9
DEFAULT_INERTNESS_MARGIN = 1e-9
DEFAULT_ORTHO_DROP_TOL = 1e-12
DEFAULT_FREQ_COUNT = 64
DEFAULT_INERTNESS_SAMPLES = 32

# Run defaults (command line / RunConfig)
DEFAULT_TOL = 1e-9
DEFAULT_HORIZON = 32
DEFAULT_SAMPLES = 10000
DEFAULT_SEED = 42
DEFAULT_SCHEME = "random"
DEFAULT_SAMPLE_RANGE = (-1.0, 1.0)

MIN_HORIZON = 0
MAX_HORIZON = 512
MIN_SAMPLES = 1
MAX_SAMPLES = 1_000_000
MAX_SEED = 2**32 - 1
MAX_TOL = 1e-2
MIN_FREQ_COUNT = 2
MAX_FREQ_COUNT = 4096
MAX_REJECT_REL_TOL = 0.5

# Probing defaults
DEFAULT_REJECT_REL_TOL = 0.01
DEFAULT_HULL_MARGIN_REL = 1e-3
DEFAULT_MAX_CANDIDATES = 800
DEFAULT_MEMBERSHIP_PAIRS = 400
DEFAULT_STAR_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_STAR_MAX_POINTS = 2000
DEFAULT_MEMBERSHIP_COND_TOL = 1e-6
DEFAULT_MEMBERSHIP_REJECT_TOL = 1e-6
DEFAULT_HOMOGENEITY_SCALES = (-1.0, -0.5, 0.5)
MAX_GRID_POINTS = 10_000_000

# Embedded example sampling
EXAMPLE_GRID_RANGE = (-6.0, 6.0)
EXAMPLE_GRID_POINTS = 301
EXAMPLE_POLAR_RADII = 401
EXAMPLE_POLAR_MAX_RADIUS = 2.0
EXAMPLE_POLAR_ANGLES = 720
EXAMPLE_CLOSED_FORM_TOL = 1e-9
EXAMPLE_AFFINE_DRAWS = 20
EXAMPLE_AFFINE_TRIPLES = 100
EXAMPLE_AFFINE_COND_TOL = 1e-3
EXAMPLE_IDS = ("a", "b", "affine", "lqg")

# Exit codes
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

# Verdicts
VERDICT_PASS = "pass"
VERDICT_NONCONVEX = "nonconvex_witness"
VERDICT_INCONCLUSIVE = "inconclusive"
VERDICT_NOT_STAR = "not_star_shaped"
VERDICT_NOT_HOMOGENEOUS = "not_homogeneous"

# Inertness certification levels
INERT_STRUCTURAL = "structural"
INERT_SAMPLED = "sampled"
INERT_VIOLATED = "violated"

# Default config filename used by the application
DEFAULT_CONFIG_FILENAME = "qi-toolkit.cfg"
CONFIG_SECTION = "run"

# Application strings
APP_NAME = "qi-toolkit"
APP_DESCRIPTION = (
    "Quadratic invariance checks, closed-loop set probes and convex H2 "
    "model-matching synthesis for structured controllers."
)
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
MAX_INPUT_FILE_SIZE_BYTES = 50 * 1024 * 1024

# Messages
MSG_SEED_FMT = "seed={seed}"
MSG_QI_TRUE = "S is quadratically invariant under G"
MSG_QI_FALSE = "S is not quadratically invariant under G"
MSG_GENERIC_PATTERN_NOTE = (
    "pattern-level test decides QI for generic numeric G supported on the "
    "pattern; cancelling numeric instances are not detected"
)
MSG_FINITE_N_EQUALS_M = (
    "finite dimensions: the resolvent set of GK has a single unbounded "
    "component, so S∩N = S∩M holds automatically"
)
MSG_SYNTH_REFUSED = (
    "synthesis refused: the Youla-type parameterization over S is exact only "
    "when S is quadratically invariant under G"
)
MSG_INVALID_INPUT_FMT = "{path}:{line}: {message}"
MSG_CHECK_LINE_FMT = "[{status}] {name}: {detail}"

_logger = logging.getLogger(__name__)

# Attempt to read a local config file and override a small set of numeric
# defaults. Invalid or out-of-range values keep the built-in defaults.
try:
    _config = configparser.ConfigParser()
    if os.path.exists(DEFAULT_CONFIG_FILENAME):
        _config.read(DEFAULT_CONFIG_FILENAME)
        if CONFIG_SECTION in _config:
            _run = _config[CONFIG_SECTION]

            def _get_float(key, fallback, minv=None, maxv=None):
                val = _run.get(key, fallback=None)
                if val is None:
                    return fallback
                try:
                    f = float(val)
                except Exception:
                    _logger.debug(
                        "Invalid float for %s in config, using fallback %s",
                        key,
                        fallback,
                    )
                    return fallback
                if minv is not None and f <= minv:
                    return fallback
                if maxv is not None and f > maxv:
                    return fallback
                return f

            def _get_int(key, fallback, minv=None, maxv=None):
                val = _run.get(key, fallback=None)
                if val is None:
                    return fallback
                try:
                    i = int(float(val))
                except Exception:
                    _logger.debug(
                        "Invalid int for %s in config, using fallback %s", key, fallback
                    )
                    return fallback
                if minv is not None and i < minv:
                    return fallback
                if maxv is not None and i > maxv:
                    return fallback
                return i

            DEFAULT_COND_TOL = _get_float(
                "cond_tol", DEFAULT_COND_TOL, minv=0.0, maxv=MAX_TOL
            )
            DEFAULT_RANK_TOL = _get_float(
                "rank_tol", DEFAULT_RANK_TOL, minv=0.0, maxv=MAX_TOL
            )
            DEFAULT_FREQ_COUNT = _get_int(
                "freq_count",
                DEFAULT_FREQ_COUNT,
                minv=MIN_FREQ_COUNT,
                maxv=MAX_FREQ_COUNT,
            )
            DEFAULT_REJECT_REL_TOL = _get_float(
                "reject_rel_tol",
                DEFAULT_REJECT_REL_TOL,
                minv=0.0,
                maxv=MAX_REJECT_REL_TOL,
            )
except Exception:
    _logger.debug(
        "Failed to read/parse %s; using built-in defaults",
        DEFAULT_CONFIG_FILENAME,
        exc_info=True,
    )
