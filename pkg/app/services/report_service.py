"""
Report service for writing run outputs and comparing reports.

Every file is written deterministically (sorted-key JSON, fixed float
format CSV), so identical runs produce identical bytes.
"""

import json
from collections.abc import Sequence
from pathlib import Path

import pandas as pd

from app.core.exceptions import IoError
from app.core.logging import get_logger
from app.schemas.protocol import ContextBreakdown, ExperimentReport, InjectionSweepReport
from app.utils.file_helpers import write_json, write_table
from app.utils.metrics import accuracy_cdf
from app.utils.validators import validate_model

logger = get_logger(__name__)


class ReportService:
    """Writes reports with their plot data and builds comparison tables."""

    def write_experiment(self, report: ExperimentReport, out_dir: str | Path) -> list[Path]:
        """
        Write ``report.json``, ``plot_cdf.csv`` and, for CBM runs,
        ``thresholds.csv`` and ``plot_thresholds.json``.
        Each CSV gets a ``.meta.json`` provenance sidecar.

        Returns:
            Paths written, in order
        """
        out = Path(out_dir)
        written = [write_json(out / "report.json", report)]

        accuracies = [
            u.summary["accuracy"].mean
            for u in report.users
            if "accuracy" in u.summary and u.summary["accuracy"].mean is not None
        ]
        cdf = pd.DataFrame(accuracy_cdf(accuracies), columns=["accuracy", "cumulative_fraction"])
        written.append(write_table(out / "plot_cdf.csv", cdf, meta=report.provenance))

        if report.threshold_summary:
            table = pd.DataFrame([row.model_dump() for row in report.threshold_summary])
            written.append(write_table(out / "thresholds.csv", table, meta=report.provenance))
            series = {
                "labels": [row.label for row in report.threshold_summary],
                "mean_accuracy": [row.mean_accuracy for row in report.threshold_summary],
                "std_accuracy": [row.std_accuracy for row in report.threshold_summary],
                "mean_community_size": [
                    row.mean_community_size for row in report.threshold_summary
                ],
                "modelable_users": [row.modelable_users for row in report.threshold_summary],
                "master_seed": report.provenance.master_seed,
                "config_hash": report.provenance.config_hash,
            }
            written.append(write_json(out / "plot_thresholds.json", series))
        return written

    def write_context(self, breakdown: ContextBreakdown, out_dir: str | Path) -> list[Path]:
        """Write the breakdown JSON and its ``plot_context.csv`` series."""
        out = Path(out_dir)
        table = pd.DataFrame([row.model_dump() for row in breakdown.rows])
        return [
            write_json(out / "context_breakdown.json", breakdown),
            write_table(out / "plot_context.csv", table, meta=breakdown.provenance),
        ]

    def write_injection(self, report: InjectionSweepReport, out_dir: str | Path) -> list[Path]:
        """Write the sweep JSON and its ``plot_injection.csv`` series."""
        out = Path(out_dir)
        table = pd.DataFrame([row.model_dump() for row in report.rows])
        return [
            write_json(out / "report.json", report),
            write_table(out / "plot_injection.csv", table, meta=report.provenance),
        ]

    def load_experiment(self, path: str | Path) -> ExperimentReport:
        """
        Read an experiment report written by :meth:`write_experiment`.

        Raises:
            IoError: If the file is missing or not JSON
            ConfigValidationError: If it is not an experiment report
        """
        source = Path(path)
        try:
            data = json.loads(source.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise IoError(str(source), str(e)) from e
        return validate_model(ExperimentReport, data)

    def compare(self, paths: Sequence[str | Path]) -> pd.DataFrame:
        """
        Side-by-side table: one row per report, mean and std per metric.

        Std is across users; the repeat-level std is kept in a separate
        column per metric.
        """
        rows = []
        for path in paths:
            report = self.load_experiment(path)
            row: dict[str, object] = {
                "report": Path(path).parent.name or Path(path).stem,
                "protocol": report.protocol.value,
                "users_ok": report.n_users_ok,
                "users_skipped": report.n_users_skipped,
            }
            for name, agg in report.aggregate.items():
                row[name] = agg.mean
                row[f"{name}_std_users"] = agg.std_across_users
                row[f"{name}_std_repeats"] = agg.std_across_repeats
            rows.append(row)
        logger.info(f"Compared {len(rows)} reports")
        return pd.DataFrame(rows)
