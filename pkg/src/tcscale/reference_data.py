"""Reference measurements from the RTX 4090 time-budget study, compiled in.

``None`` marks cells that were never run. Parameter counts and throughputs
flagged approximate were reported with a tilde.
"""

BUDGETS_MIN = (5.0, 30.0, 60.0, 120.0, 240.0, 480.0, 720.0, 1440.0)

DATASET_TOKENS = 48_000_000

# depth, params_m, params_exact, tokens_per_sec, mfu_pct
CONFIG_ROWS = (
    (8, 50.3, True, 428_000.0, 10.4),
    (10, 85.9, True, 252_000.0, 10.7),
    (12, 135.3, True, 160_000.0, 10.9),
    (14, 200.9, True, 110_000.0, 11.4),
    (16, 285.2, True, 78_000.0, 11.4),
    (18, 384.0, False, 56_000.0, 11.0),
    (20, 519.0, True, 36_000.0, 11.0),
    (22, 621.0, False, 27_000.0, 11.0),
    (24, 855.6, True, 20_000.0, 11.0),
    (26, 1031.0, False, 5_000.0, 3.0),
)

# validation BPB per depth, one entry per budget in BUDGETS_MIN
BPB_TABLE = {
    8: (1.133, 0.977, 0.979, 0.906, 0.925, 0.886, 0.919, None),
    10: (1.178, 0.973, 0.976, 0.906, 0.892, 0.886, 0.885, None),
    12: (1.363, 1.001, 0.991, 0.904, 0.878, 0.873, 0.871, 0.870),
    14: (1.578, 1.016, 0.945, 0.901, 0.866, 0.854, 0.852, 0.857),
    16: (1.566, 1.026, 0.951, 0.901, 0.862, 0.844, 0.841, 0.851),
    18: (None, None, None, None, 0.866, 0.837, 0.833, 0.845),
    20: (1.804, None, 1.009, None, 0.872, 0.836, 0.828, 0.838),
    22: (None, None, None, None, None, None, 0.826, 0.829),
    24: (1.854, None, None, None, 0.896, 0.845, 0.824, 0.817),
    26: (None, None, None, None, None, None, None, 0.814),
}

MULTISEED_BUDGET_MIN = 30.0
MULTISEED_SEEDS = (42, 123, 456)
MULTISEED_BPB = {
    8: (0.977, 0.975, 0.975),
    10: (0.973, 0.974, 0.973),
    14: (1.016, 1.022, 1.017),
    16: (1.026, 1.032, 1.029),
}

# Inert records: reported alongside the study, never modeled.
ARCHITECTURE_BPB_5MIN = {
    "dense": 1.133,
    "moe": 1.143,
    "retnet": 2.216,
    "gla": 2.249,
    "rwkv6": 2.258,
}
LR_ABLATION_1H = {
    "D14_lr3e-4": 0.945,
    "D14_lr6e-4": 0.944,
    "D8_best_lr": 0.948,
}
