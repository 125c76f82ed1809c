"""
Configuration file for the Compositional Fairness Remediation Engine
"""
import os
from pathlib import Path

# =========================
# PATHS
# =========================
BASE_DIR = Path(__file__).resolve().parent.parent
CONFIGS_DIR = BASE_DIR / "configs"

# Default directory for sweep / bench reports
DEFAULT_OUTPUT_DIR = BASE_DIR / "results"

# =========================
# MODEL CONFIG
# =========================
DEFAULT_DIM = 1000        # hashing vectorizer buckets
DEFAULT_HIDDEN = 64       # hidden units of the single hidden layer

# =========================
# TRAINING CONFIG
# =========================
DEFAULT_EPOCHS = 25
DEFAULT_LR = 0.1
DEFAULT_BANDWIDTH = 1.0   # Gaussian kernel length scale over [0, 1] predictions
DEFAULT_MAIN_BATCH = 128
DEFAULT_SIDE_BATCH = 16   # examples per conditioned side (b_s)

# Steps excluded from the steps/sec window
WARMUP_STEPS = 10

# =========================
# DATA CONFIG
# =========================
LABEL_THRESHOLD = 0.5
GROUP_THRESHOLD = 0.5

# Civil Comments subset used for the component experiments
CIVIL_COMMENTS_TEXT_COLUMN = "comment_text"
CIVIL_COMMENTS_LABELS = ["identity_attack", "insult", "toxicity"]
CIVIL_COMMENTS_GROUPS = ["black", "homosexual_gay_or_lesbian", "female", "transgender"]

# =========================
# EVALUATION CONFIG
# =========================
DEFAULT_TARGET_FPR = 0.05

# =========================
# SWEEP CONFIG
# =========================
DEFAULT_LAMBDA_GRID = [0.0, 0.1, 0.3, 1.0, 3.0, 10.0]
DEFAULT_RUNS_PER_POINT = 5
DEFAULT_SPLITS = (0.7, 0.1, 0.2)   # train / validation / test
DEFAULT_BASE_SEED = 0
DEFAULT_TIMING_RUNS = 5

# =========================
# REPORT CONFIG
# =========================
RUNS_FILENAME = "runs.csv"
AGGREGATE_FILENAME = "aggregate.csv"
PARETO_FILENAME = "pareto.txt"
BENCH_FILENAME = "scaling.csv"

# Columns present in every per-run row, before the per-group / per-task metrics
RUN_BASE_COLUMNS = [
    "strategy",
    "lam",
    "run_index",
    "seed",
    "status",
    "reason",
    "steps_per_sec",
    "total_steps",
    "system_roc_auc",
    "accuracy",
    "mean_aucpr",
    "n_eval",
]

# Metrics aggregated into mean / CI half-width per (strategy, lam)
AGGREGATE_KEYS = ["strategy", "lam"]

# =========================
# LOGGING CONFIG
# =========================
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LOG_LEVEL = os.environ.get("MINDIFF_LOG_LEVEL", "INFO").upper()
