import math

# Procedure ids, as written to CSV output
NP = "np"
UMP = "ump"
SD = "sd"
TRIVIAL = "trivial"
T = "t"
SUBMARINE_PROCEDURES = (NP, UMP, SD, TRIVIAL)

# Composite outcomes of the UMP + SD pair
EITHER = "ump_or_sd"
BOTH = "ump_and_sd"

# Statistic ids
STAT_D = "D"
STAT_W = "W"
STAT_WIDTH = "width"
STAT_MAX_WIDTH = "max_width"
STAT_NESTING = "nesting"
STAT_STUDENTIZED_RANGE = "studentized_range"

# Submarine design
DEFAULT_HULL_WIDTH = 10.0
SD_HALF_WIDTH_FACTOR = 1.0 - 1.0 / math.sqrt(2.0)

# Sweep defaults: 10 hatch locations x 10 hull widths
DEFAULT_THETA_GRID = [float(theta) for theta in range(0, 10)]
DEFAULT_HULL_WIDTH_GRID = [float(width) for width in range(10, 101, 10)]
DEFAULT_N_TRIALS = 100_000
DEFAULT_SEED = 1937
DEFAULT_ALPHA = 0.5
DEFAULT_CHUNK_SIZE = 2**14

# Conditioning defaults
DEFAULT_BINS_D = 50
DEFAULT_BINS_W = 25
DEFAULT_BINS_OUTER = 25
MIN_BIN_OCCUPANCY = 200
THETA_FREE_TOLERANCE = 0.02
NOISE_ALLOWANCE_SE = 4.0

# Environment
OUT_DIR_ENV = "COVERAGE_FORECAST_OUT_DIR"
DEFAULT_OUT_DIR = "output"

# Markdown row labels
SINGLE_LABELS = {
    "constant_one": "Constant 1",
    "constant_level": "Constant 1-α",
    "np_width": "NP width",
    "ump_width": "UMP width",
    "oracle": "Oracle",
}
PAIRED_LABELS = {
    "constant_one": "Constant 1",
    "constant_joint": "Constant p_joint",
    "nesting": "Nest. Cond.",
    "max_width": "Max Width",
}

# Output file names
SUMMARY_CSV = "config_summary.csv"
TABLES_CSV = "conditional_coverage.csv"
THETA_FREENESS_CSV = "theta_freeness.csv"
SINGLE_MD = "single_scores.md"
PAIRED_MD = "paired_scores.md"
SINGLE_CSV = "single_scores.csv"
PAIRED_CSV = "paired_scores.csv"
MANIFEST_JSON = "manifest.json"

# Acceptance targets: key -> (target, tolerance)
EXPECTED = {
    "marginal.np": (0.5, 0.006),
    "marginal.ump": (0.5, 0.006),
    "marginal.sd": (0.5, 0.006),
    "single.constant_one": (0.5, 0.001),
    "single.constant_level": (0.25, 0.001),
    "single.np_width": (0.114, 0.010),
    "single.ump_width": (0.166, 0.009),
    "single.variance": (0.0, 0.001),
    "single.dominance": (0.0, 0.0),
    "curve.np": (0.0, 0.03),
    "curve.ump": (0.0, 0.03),
    "curve.d_quarter": (1.0 / 3.0, 0.03),
    "composite.p_joint": (0.586, 0.006),
    "composite.sd_inside_ump": (0.793, 0.010),
    "composite.ump_inside_sd": (0.441, 0.010),
    "composite.gap_sd_inside_ump": (0.085, 0.005),
    "composite.gap_ump_inside_sd": (0.085, 0.005),
    "composite.gap_identity": (0.0, 1e-12),
    "paired.constant_one": (0.414, 0.006),
    "paired.constant_joint": (0.243, 0.005),
    "paired.nesting": (0.213, 0.010),
    "paired.max_width": (0.208, 0.010),
    "paired.variance": (0.0, 0.001),
    "paired.ordering": (0.0, 0.0),
    "theta_free.np_d": (0.0, 0.02),
    "theta_free.ump_w": (0.0, 0.02),
    "theta_free.nesting": (0.0, 0.02),
    "tower": (0.0, 1e-12),
    "t.marginal": (0.95, 0.004),
    "t.decile": (0.0, 0.012),
    "t.critical": (2.776, 0.0005),
    "propriety.grid": (0.0, 0.0),
    "propriety.bernoulli": (0.0, 0.0),
    "monty.exact_stay": (1.0 / 3.0, 0.0),
    "monty.exact_switch": (2.0 / 3.0, 0.0),
    # monty tolerances are in standard errors of the simulated mean
    "monty.stay": (-5.0, 4.0),
    "monty.switch": (0.0, 4.0),
}

# (mu, sigma) designs for the t-interval constancy check
T_DESIGNS = ((0.0, 1.0), (100.0, 1.0), (0.0, 3.0))
