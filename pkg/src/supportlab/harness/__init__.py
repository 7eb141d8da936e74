from .campaign import InvariantViolation, read_rows, rows_to_csv, run_campaign, run_point, write_rows
from .config import COLUMNS, SCHEMA_VERSION, ConfigError, ExperimentConfig, GridPoint, ResultRow
from .diagnostics import CompositionDiagnostic, DiagnosticScaleExceeded, diagnose_compositions, diagnose_plan
from .scaling import scaling_table, table_to_csv

__all__ = [
    "COLUMNS", "SCHEMA_VERSION", "CompositionDiagnostic", "ConfigError", "DiagnosticScaleExceeded",
    "ExperimentConfig", "GridPoint", "InvariantViolation", "ResultRow", "diagnose_compositions",
    "diagnose_plan", "read_rows", "rows_to_csv", "run_campaign", "run_point", "scaling_table",
    "table_to_csv", "write_rows",
]
