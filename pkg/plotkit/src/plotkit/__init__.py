"""Figure rendering for experiment metrics CSV files."""

from .figures import (
    COMPOSABILITY_METHODS,
    REQUIRED_COLUMNS,
    SATISFACTION_METHODS,
    CurveSpec,
    SchemaError,
    plot_composability,
    plot_satisfaction,
    read_rows,
)

__all__ = [
    "COMPOSABILITY_METHODS",
    "REQUIRED_COLUMNS",
    "SATISFACTION_METHODS",
    "CurveSpec",
    "SchemaError",
    "plot_composability",
    "plot_satisfaction",
    "read_rows",
]
