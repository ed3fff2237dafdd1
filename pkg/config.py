# Configuration file for the UTG temporal graph toolkit

import os

from dotenv import load_dotenv

load_dotenv()

CODE_VERSION = "0.3.0"

# Named time granularities, widths in raw seconds (month is a fixed 30 days)
GRANULARITIES = {
    "second": 1,
    "minute": 60,
    "hour": 3600,
    "day": 86400,
    "week": 604800,
    "month": 2592000,
}

# Candidates tried by `--granularity auto`, finest first
DEFAULT_GRANULARITY_CANDIDATES = ["second", "minute", "hour", "day", "week", "month"]

# Chronological split settings
SPLIT_SETTINGS = {
    "train_frac": 0.70,
    "val_frac": 0.15,
    "test_frac": 0.15,
}

# Negative sampling settings
NEGATIVE_SETTINGS = {
    "q": int(os.getenv("UTG_NEGATIVES", "1000")),  # negatives per positive edge
    "historical_fraction": 0.5,
    "pool": "source",  # "source" or "global"
    "seed": int(os.getenv("UTG_SEED", "42")),
}

# Evaluation settings
EVAL_SETTINGS = {
    "tie_policy": "pessimistic",  # "pessimistic", "optimistic" or "mean"
    "batch_size": 200,
    "respect_timestamp_boundaries": True,
    "modes": ["streaming", "deployed"],
}

# EdgeBank settings
EDGEBANK_SETTINGS = {
    "window_rule": "test_span",  # "test_span" or "ratio"
    "time_window_ratio": 0.15,
}

# Logistic edge scorer settings
LOGISTIC_SETTINGS = {
    "feature_names": ["bias", "log_count", "recency", "log_common_neighbors", "log_degree_product"],
}

# Training settings
TRAINING_SETTINGS = {
    "epochs_dtdg": 200,
    "epochs_ctdg": 40,
    "patience": 20,
    "tolerance": 1e-5,
    "learning_rates": [0.001, 0.0002],
    "optimizer": "sgd",  # "sgd" or "adam"
    "negatives_per_positive_train": 1,
    "val_negatives": 100,
}

# Output settings
OUTPUT_SETTINGS = {
    "output_directory": os.getenv("UTG_OUTPUT_DIRECTORY", "utg_results"),
    "json_indent": 2,
    "node_mapping_suffix": ".nodes.json",
    "negatives_meta_suffix": ".meta.json",
}

# Throughput benchmark (EdgeBank unlimited on a synthetic stream)
BENCHMARK_SETTINGS = {
    "num_events": 500_000,
    "num_nodes": 10_000,
    "t_span": 30 * 86400,
    "q": 100,
    "history_fraction": 0.1,
    "seed": 0,
}

# Logging settings
LOG_SETTINGS = {
    "level": os.getenv("UTG_LOG_LEVEL", "INFO"),
    "format": "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}:{function} - {message}",
}

# Models exposed on the command line
MODELS = {
    "edgebank-inf": "EdgeBank with unlimited memory",
    "edgebank-tw": "EdgeBank with a fixed time window",
    "logistic": "Logistic edge scorer trained per snapshot",
}
