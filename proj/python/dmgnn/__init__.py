"""Python access to the dmgnn core: data loading, proximity, metrics and the CLI."""

from ._dmgnn import (
    NumericError,
    ValidationError,
    f1_scores,
    load_network,
    ppmi,
    run_cli,
    schedules,
)

__all__ = [
    "NumericError",
    "ValidationError",
    "f1_scores",
    "load_network",
    "ppmi",
    "run_cli",
    "schedules",
]
