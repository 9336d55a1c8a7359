"""
Report Writer - Emits run reports as JSON documents or CSV check tables
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Optional

from models.schemas import OutputSpec, RunReport

CSV_COLUMNS = ("name", "anchor", "passed", "tolerance", "breakdown", "error", "values", "provenance")


class ReportWriter:
    """Serializes RunReport records in a stable field order."""

    def render(self, report: RunReport, fmt: str = "json", include_timing: bool = True) -> str:
        if fmt == "csv":
            return self._render_csv(report)
        body = report.model_dump(mode="json")
        if not include_timing:
            body.pop("timing", None)
        return json.dumps(body, indent=2, ensure_ascii=False) + "\n"

    def _render_csv(self, report: RunReport) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for check in report.checks:
            writer.writerow([
                check.name, check.anchor, check.passed, check.tolerance, check.breakdown, check.error or "",
                json.dumps(check.values, ensure_ascii=False), json.dumps(check.provenance, ensure_ascii=False),
            ])
        return buffer.getvalue()

    def write(self, report: RunReport, output: OutputSpec) -> Optional[Path]:
        """Write to output.path, or return None after printing to standard output."""
        text = self.render(report, output.format)
        if not output.path:
            print(text, end="")
            return None
        path = Path(output.path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logging.info(f"📄 Report written to {path}")
        return path
