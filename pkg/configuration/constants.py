NAME = "stoplab"
VERSION = "0.1.0"
LOGGING_ROOT = "stoplab"

CONFIG_FILE = "configuration/config.yaml"

# Laguerre machinery
QUADRATURE_ORDER = 64
QUADRATURE_MAX_ORDER = 512
QUADRATURE_RELATIVE_TOLERANCE = 1e-9
LEGENDRE_ORDER = 64  # Used on the finite pieces between breakpoints
DEGREE_CAP = 64
FINITE_DIFFERENCE_STEP = 1e-4

# Dyadic tree oracle
TREE_STEP_CAP = 24
TREE_TOLERANCE = 1e-13
EXHAUSTIVE_RANDOM_TIME_STEPS = 3  # 3^8 = 6561 random times, all of them get enumerated
EXHAUSTIVE_STOPPING_TIME_STEPS = 4
DIVISION_NULL_TOLERANCE = 1e-15

# Brownian paths
DEFAULT_DT = 1e-4
DEFAULT_HORIZON = 1.0
DEFAULT_LEVEL = 1.0
HORIZON_DOUBLING_CAP = 2 ** 10
ZERO_BAND_FACTOR = 2.0  # zero band is ZERO_BAND_FACTOR * sqrt(dt)
LOCAL_TIME_EPSILON_EXPONENT = 0.4
LOCAL_TIME_TOLERANCE = 0.05  # Relative disagreement allowed between the two local time estimators (on average)
PATH_BLOCK = 512  # Paths simulated per vectorized block
DEFAULT_RENEWAL_FLOOR = -1.0  # Excursions below this restart at 0 while searching for T_1

# Closed forms for the last zero
ARCSINE_RULE_ORDER = 128
HERMITE_ORDER = 80
THETA_AGREEMENT = 1e-8

# Statistics and verdicts
Z_BAND = 3.0
KS_ALPHA = 0.01
CI99_QUANTILE = 2.576
MIN_MOMENT_SAMPLES = 10_000
MIN_KS_SAMPLES = 100
GAMMA_BINS = 10

DEFAULT_SEED = 0x5A17_0C0D_E5EE_D000_0000_0000_0000_0001
DEFAULT_N = 100_000
DEFAULT_TREE_STEPS = 10
DEFAULT_FUZZ_TIMES = 50

VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_OBSERVED = "observed"

REPORT_FORMATS = ("json", "csv")
CSV_HEADER = ["experiment", "metric", "value"]
SAMPLE_CSV_HEADER = ["path_id", "functional", "value"]

ERROR_UNKNOWN_EXPERIMENT = "Unknown experiment id {id}. Run `lab list` to see the registry."
ERROR_CONFIG_KEY = "Unknown configuration key {key}."
ERROR_CONFIG_VALUE = "Invalid value {value!r} for configuration key {key}: {reason}"
ERROR_CONFIG_MISSING = "Configuration file {path} not found."

# Experiment registry
# Format:
# {experiment id: [module, class]}
EXPERIMENT_TYPES = {"E1": ["experiments.TreeCharacterizations", "TreeCharacterizations"],
                    "E2": ["experiments.KunitaWatanabe", "KunitaWatanabe"],
                    "E3": ["experiments.EnlargementDecompositions", "EnlargementDecompositions"],
                    "E4": ["experiments.ExponentialLaw", "ExponentialLaw"],
                    "E5": ["experiments.LaguerreMembership", "LaguerreMembership"],
                    "E6": ["experiments.OddEvenProjections", "OddEvenProjections"],
                    "E7": ["experiments.PerpMartingales", "PerpMartingales"],
                    "E8": ["experiments.LastZeroFailure", "LastZeroFailure"],
                    "E9": ["experiments.Balayage", "Balayage"],
                    "E10": ["experiments.PhiFamily", "PhiFamily"],
                    "E11": ["experiments.ImhofIndependence", "ImhofIndependence"],
                    "E12": ["experiments.PredictableProjection", "PredictableProjection"],
                    "E13": ["experiments.PostHonestDrift", "PostHonestDrift"],
                    "E14": ["experiments.PseudoStoppingSearch", "PseudoStoppingSearch"]}

# Experiment thresholds
EXPONENTIAL_MEAN_BAND = 0.02
LAGUERRE_GAP_BAND = 0.03
OVERSHOOT_FACTOR = 1.0  # Grid allowance on M^phi at the last zero: factor * sqrt(dt) * E|hat - phi|(A) / |level|
LAST_ZERO_MEAN_BAND = 0.01
ODD_EVEN_MEAN_BAND = 0.02
SUPREMUM_WINDOW = 0.9  # Supremum checks stay on t <= SUPREMUM_WINDOW, away from the blow-up of lambda weights
SUPREMUM_TOLERANCE_FACTOR = 5.0  # grid tolerance is factor * sqrt(dt / (1 - t))
GAMMA_VALUE_TOLERANCE_FACTOR = 10.0
PATH_SHARE = 0.99  # Share of paths a pathwise identity has to hold on
ZERO_AT_STOP_SHARE = 0.99
PERP_DISCREPANCY_TOLERANCE = 1e-6
ENLARGEMENT_TOLERANCE = 1e-12
RECONSTRUCTION_TOLERANCE = 1e-12
PROJECTION_TIME = 0.5
HAT_DEFECT_TOLERANCE = 1e-6
CORIMPORT_FLOOR = 0.4  # Non-constant members keep hat - phi at least this far from 0 somewhere on the grid
H1_GRID_BIAS_FACTOR = 5.0  # sup of M^phi over the grid may trail hat(A_1) by up to factor * sqrt(dt) on average
