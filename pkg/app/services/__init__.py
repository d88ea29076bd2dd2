"""Services package for cohort handling, modelling and reporting."""

from app.services.cohort_service import CohortService
from app.services.forest_service import RandomForestModel, fit_forest, grid_search
from app.services.protocol_service import (
    ProtocolRunner,
    context_breakdown,
    injection_sweep,
    run_cbm,
    run_hm,
    run_plm,
    run_ulm,
)
from app.services.report_service import ReportService
from app.services.synth_service import SyntheticCohort, emit_csv, generate_cohort

__all__ = [
    "CohortService",
    "RandomForestModel",
    "fit_forest",
    "grid_search",
    "ProtocolRunner",
    "context_breakdown",
    "injection_sweep",
    "run_cbm",
    "run_hm",
    "run_plm",
    "run_ulm",
    "ReportService",
    "SyntheticCohort",
    "emit_csv",
    "generate_cohort",
]
