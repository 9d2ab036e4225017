"""Time-constrained scaling laws for language-model training runs.

Fits optimal-size and best-loss power laws over wall-clock budgets, labels
U-curve regimes, flags overfitting, plans a model size for a budget on
profiled hardware, and simulates the dual U-shape.
"""

from .domain import ModelConfig, PowerLawFit, RunGrid, RunRecord, aspect_ratio, derive_dims
from .ingest import load_reference_dataset, parse_hardware_profile, parse_runs, serialize_runs
from .kernels import BACKEND
from .powerlaw import TiePolicy, bootstrap_ci, evaluate, fit_power_law

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ModelConfig",
    "PowerLawFit",
    "RunGrid",
    "RunRecord",
    "TiePolicy",
    "aspect_ratio",
    "bootstrap_ci",
    "derive_dims",
    "evaluate",
    "fit_power_law",
    "load_reference_dataset",
    "parse_hardware_profile",
    "parse_runs",
    "serialize_runs",
]
