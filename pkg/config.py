import os

# ====================================================================
# --- RUN SETTINGS ---
# ====================================================================
RANDOM_SEED = 42
QUICK_PATHS = 10_000     # --quick profile (CI)
FULL_PATHS = 100_000     # --full profile (acceptance table)
NUM_DIRECTIONS = 20      # random separable directions in B, plus normalized ones
PATH_BLOCK = 4096        # paths per RNG stream; fixes path content independent of workers
THREADS_ENV = "POLYMART_THREADS"

# ====================================================================
# --- CONSTANTS & DOMAIN ---
# ====================================================================
P_FLOOR = 4.0            # moment orders below this are rejected unless extended=True
OS_GRID_MIN = 4.0
OS_GRID_MAX = 200.0
OS_GRID_STEP = 0.01
K_R = 0.6535             # Rosenthal constant, ~1.77638/e
CONSTANTS_MAX_D = 10     # rows in the gamma/kappa table

# ====================================================================
# --- EVALUATORS ---
# ====================================================================
ENUMERATION_CAP = 10_000_000   # max C(n, d) for brute-force enumeration
UNIT_NORM_TOL = 1e-12

# Centered Poisson(1) series: stop once the certified remainder drops
# below POISSON_REL_TOL times the partial sum.
POISSON_REL_TOL = 1e-14
POISSON_MAX_TERMS = 200_000

# ====================================================================
# --- MONTE CARLO ---
# ====================================================================
MC_SLACK = 3.0           # relative standard errors allowed above the bound
SANITY_RATIO_CEILING = 0.2
MC_P_CAP = 16.0          # largest p used against simulated samples
PSI_MC_PATHS = 20_000    # paths per Psi estimate for non-independent families

# ====================================================================
# --- GRAND LEBESGUE ---
# ====================================================================
MARKOV_P_MIN = 4.0
MARKOV_P_MAX = 1e4
MARKOV_GRID_POINTS = 200
MARKOV_XTOL = 1e-6
C3_P_GRID = (4.0, 1000.0, 60)    # (min, max, points), log-spaced
QUAD_TAIL_DROP = 80.0            # integrate until integrand falls e^-80 below its mode
MIN_FIT_POINTS = 8

# ====================================================================
# --- VERIFICATION SUITE ---
# ====================================================================
SUITE_FAMILIES = ["rademacher", "gaussian", "centered_poisson", "martingale_scaled"]
SUITE_D = [1, 2, 3]
SUITE_N = [10, 30]
SUITE_P = [4.0, 8.0, 12.0]

DECOMPOSE_FAMILIES = ["rademacher", "martingale_scaled"]
DECOMPOSE_N = [16, 64]
DECOMPOSE_P = [4.0, 8.0]

TAIL_CASES = [(1, 2.0, 0.0), (2, 1.0, 0.0), (1, 2.0, 1.0)]   # (d, q, r)
TAIL_X_GRID = (10.0, 1e4, 40)        # (min, max, points), log-spaced
TAIL_X_GRID_WIDE = (1e4, 1e7, 40)    # d >= 2: the Markov optimum leaves the p floor only here
TAIL_ALPHA_TOL = 0.10
TAIL_DOMINATION_D = [1, 2]
TAIL_DOMINATION_N = 30
TAIL_DOMINATION_X = (3.0, 30.0, 20)
POISSON_DEMO_P = [8, 16, 32, 64, 128, 256, 512]
POISSON_LOG_BAND = (0.85, 1.15)     # ln|xi|_p / ln(p / (e ln p)) at the largest p
EXACT_TOL = 1e-9                    # closed-form sub-checks of the decomposition


def worker_count():
    """Worker cap from POLYMART_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
