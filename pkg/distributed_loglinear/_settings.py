DEFAULT_ENUMERATION_GUARD = 2**22
DEFAULT_SPARSE_THRESHOLD = 2**22
DEFAULT_MAX_CLIQUES = 10**6

# cells are written as one digit per vertex while every vertex has at most this many levels
DIGIT_ENCODING_MAX_LEVELS = 10
CELL_SEPARATOR = ":"

ENV_PREFIX = "DLL_"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_MLE_DOES_NOT_EXIST = 2

DEFAULT_BURN_IN = 1000
DEFAULT_THINNING = 5

# added to every cell count before fitting in the sweeps
DEFAULT_SWEEP_EPSILON = 2.0**-30
