#!/usr/bin/env python3
"""
Test script for manifests, report output and the gbc command line.
"""

import csv
import io
import json
import os
import sys
import tempfile
from unittest.mock import patch

import pytest

# Add the current directory to the path so we can import our modules
sys.path.insert(0, '.')

import gbc
from models.schemas import CheckRecord, Manifest, RunReport
from processors.manifest_parser import ManifestParser
from processors.report_writer import CSV_COLUMNS, ReportWriter
from services.run_service import RunService
from services.variation_service import VariationService
from utils.errors import ManifestError, NumericalBreakdownError


def _errors(data) -> list:
    with pytest.raises(ManifestError) as info:
        ManifestParser().from_dict(data)
    return info.value.errors


def test_manifest_rejections():
    print("Testing manifest validation...")
    assert any("needs a manifold" in e for e in _errors({"operation": "invariants"}))
    assert _errors({"operation": "invariants", "manifold": {"id": "hyperbolic"}}) == ["unknown catalog id 'hyperbolic'"]
    assert any("bogus" in e for e in _errors({"operation": "einstein", "bogus": 1}))
    assert any("dimension 2 or 4" in e for e in _errors({"operation": "gauss-bonnet", "dimension": 3}))
    errors = _errors({"operation": "invariants", "manifold": {"id": "sphere", "params": {"n": 3}}, "k": [2, 0]})
    assert "k=2: 2k exceeds n=3" in errors
    assert "k=0: orders start at 1" in errors
    with pytest.raises(ManifestError) as info:
        ManifestParser().parse("{not json")
    assert info.value.errors[0].startswith("Malformed JSON")
    print("✅ Manifest validation tests passed")


def test_manifest_from_flags():
    manifest = ManifestParser().from_flags("variation", manifold="sphere", n=3, r=2.0, k=[1], quad_order=8,
                                           tol=1e-4, out="report.csv", fmt="csv")
    assert manifest.manifold.params == {"n": 3, "r": 2.0}
    assert manifest.numeric.quad_order == 8
    assert manifest.numeric.tolerances.main_theorem == 1e-4
    assert manifest.numeric.seed == 0
    assert manifest.output.format == "csv"

    fiber = ManifestParser().from_flags("verify-identities", n=5)
    assert fiber.dimension == 5 and fiber.manifold is None

    product = ManifestParser().from_dict({
        "operation": "einstein", "k": [1, 2, 3],
        "manifold": {"id": "product", "params": {"factors": [{"id": "sphere", "params": {"n": 3}},
                                                              {"id": "flat_torus", "params": {"n": 3}}]}},
    })
    assert product.k == [1, 2, 3]


def _sample_report() -> RunReport:
    manifest = Manifest(operation="einstein")
    checks = [
        CheckRecord(name="einstein:S5:k1", anchor="T_2k = λg", values={"lambda": 6.0, "residual": 1e-13},
                    tolerance=1e-8, passed=True, provenance={"curvature": "analytic metric derivatives"}),
        CheckRecord(name="operators", anchor="numerical breakdown", passed=False, error="boom", breakdown=True),
    ]
    return RunReport(manifest=manifest, seed=0, checks=checks, passed=False, timing={"total_seconds": 1.5})


def test_report_rendering_is_stable():
    writer = ReportWriter()
    report = _sample_report()
    first = writer.render(report, include_timing=False)
    second = writer.render(report.model_copy(update={"timing": {"total_seconds": 9.0}}), include_timing=False)
    assert first == second
    body = json.loads(first)
    assert list(body) == ["manifest", "version", "seed", "checks", "passed"]
    assert body["checks"][1]["breakdown"] is True

    rows = list(csv.reader(io.StringIO(writer.render(report, "csv"))))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][0] == "einstein:S5:k1"
    assert json.loads(rows[1][6]) == {"lambda": 6.0, "residual": 1e-13}


def test_run_service_invariants():
    manifest = ManifestParser().from_flags("invariants", manifold="sphere", n=2, k=[1], quad_order=8, points=2)
    report = RunService(threads=2).run(manifest)
    assert report.passed
    (check,) = report.checks
    assert check.name == "invariants:S2:k1"
    assert check.values["closed_form"] == pytest.approx(1.0)
    assert check.values["h2k_mean"] == pytest.approx(1.0)
    assert check.values["H2k"] == pytest.approx(4 * 3.141592653589793, rel=1e-5)


def test_run_service_keeps_submission_order():
    manifest = ManifestParser().from_flags("einstein", manifold="sphere", n=5, k=[2, 1], points=2)
    report = RunService(threads=4).run(manifest)
    assert [c.name for c in report.checks] == ["einstein:S5:k2", "einstein:S5:k1"]
    assert all(c.passed is None for c in report.checks)
    assert report.passed


def test_breakdown_is_recorded_not_raised():
    manifest = ManifestParser().from_flags("gauss-bonnet", n=2)
    failure = NumericalBreakdownError("Metric is not positive-definite", [0.1, 0.2])
    with patch.object(VariationService, "verify_gb_invariance", side_effect=failure):
        report = RunService().run(manifest)
    assert not report.passed
    assert report.checks[0].breakdown
    assert "0.1" in report.checks[0].error
    assert gbc.exit_code(report) == gbc.EXIT_BREAKDOWN


def test_command_line_exit_codes():
    assert gbc.main(["invariants", "--log-level", "WARNING"]) == gbc.EXIT_MANIFEST
    assert gbc.main(["gauss-bonnet", "--n", "3", "--log-level", "WARNING"]) == gbc.EXIT_MANIFEST
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "reports", "einstein.json")
        code = gbc.main(["einstein", "--manifold", "sphere", "--n", "3", "--points", "2",
                         "--out", out, "--log-level", "WARNING"])
        assert code == gbc.EXIT_PASSED
        with open(out, encoding="utf-8") as handle:
            body = json.load(handle)
        assert body["manifest"]["operation"] == "einstein"
        assert body["checks"][0]["name"] == "einstein:S3:k1"

        manifest_path = os.path.join(tmp, "manifest.json")
        with open(manifest_path, "w", encoding="utf-8") as handle:
            json.dump({"operation": "variation", "manifold": {"id": "sphere", "params": {"n": 2}}}, handle)
        assert gbc.main(["einstein", "--manifest", manifest_path, "--log-level", "WARNING"]) == gbc.EXIT_MANIFEST


def main():
    """Run all tests."""
    print("🧪 Testing Manifests, Reports and the Command Line")
    print("=" * 50)

    try:
        test_manifest_rejections()
        test_manifest_from_flags()
        test_report_rendering_is_stable()
        test_run_service_invariants()
        test_run_service_keeps_submission_order()
        test_breakdown_is_recorded_not_raised()
        test_command_line_exit_codes()

        print("=" * 50)
        print("🎉 All tests passed! Command line is working correctly.")

    except Exception as e:
        print(f"❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
