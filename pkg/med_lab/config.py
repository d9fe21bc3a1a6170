"""Default tolerances, iteration limits and paths shared by every med_lab module."""
from pathlib import Path

# ---------------------------
# KERNEL TOLERANCES
# ---------------------------
HERMITIAN_TOL = 1e-12        # max |H - H^dagger| after construction
HERMITIAN_REJECT_TOL = 1e-8  # inputs further from Hermitian than this are rejected
PSD_TOL = 1e-9
RECONSTRUCTION_TOL = 1e-8
RANK_TOL = 1e-10             # relative to lambda_max
SQRT_CLAMP_TOL = 1e-10       # eigenvalues above -this are clamped to 0 before sqrt

# ---------------------------
# ENSEMBLE TOLERANCES
# ---------------------------
PRIOR_SUM_TOL = 1e-12
TRACE_TOL = 1e-9
UNITARY_TOL = 1e-9
ORBIT_TOL = 1e-9
COMMUTANT_RCOND = 1e-9

# ---------------------------
# CERTIFICATION
# ---------------------------
CERTIFY_TOL = 1e-7
COMPLETENESS_TOL = 1e-8
RATIO_BOUND_SLACK = 1e-9
PROBABILITY_SLACK = 1e-10

# ---------------------------
# CLOSED FORMS
# ---------------------------
FEASIBILITY_TOL = 1e-8       # scaled by sqrt(d^2 + 1)
DEGENERACY_GUARD = 1e-10     # d * a_max - 1 below this -> maximally mixed seed
EIGENSPACE_TOL = 1e-9
CLOSURE_TOL = 1e-8
LATITUDE_FIT_TOL = 1e-9

# ---------------------------
# ORACLE
# ---------------------------
ORACLE_MAX_ITER = 20000
ORACLE_STEP_TOL = 1e-10
ORACLE_RANK_TOL = 1e-12
ORACLE_RESTARTS = 2
ORACLE_RESTART_MIX = 0.5     # weight of the random POVM in a restart start point
COMPLETENESS_REPROJECT_TOL = 1e-12
MONOTONE_SLACK = 1e-10
RANDOM_POVM_RETRIES = 3

# ---------------------------
# CLI
# ---------------------------
DEFAULT_SEED = 7
DATA_DIR = Path("data/ensembles")
LOG_LEVEL_ENV = "MED_LAB_LOG_LEVEL"
SWEEP_FIELDS = ("a", "theta", "n", "two_j")
