#!/usr/bin/env python3
"""
GBC Command Line
Entry point for invariant evaluation and the numerical verification suites
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

import config
from models.schemas import Manifest, RunReport
from processors.manifest_parser import ManifestParser
from processors.report_writer import ReportWriter
from services.run_service import RunService
from utils.errors import ManifestError

COMMANDS = ("invariants", "verify-identities", "variation", "gauss-bonnet", "einstein")

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_MANIFEST = 2
EXIT_BREAKDOWN = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gbc", description="Gauss-Bonnet curvatures, Lovelock tensors and their variations")
    parser.add_argument("--version", action="version", version=f"gbc {config.__version__}")
    parser.add_argument("command", choices=COMMANDS, help="Operation to run")
    parser.add_argument("--manifest", help="JSON manifest file; replaces the inline flags below")
    parser.add_argument("--manifold", help="Catalog id: flat_torus, sphere, product, conformal_flat, perturbed_sphere")
    parser.add_argument("--n", type=int, help="Manifold dimension, or fiber dimension without a manifold")
    parser.add_argument("--k", type=int, action="append", help="Order k (repeatable)")
    parser.add_argument("--r", type=float, help="Sphere radius")
    parser.add_argument("--seed", type=int, help=f"Random seed (default: {config.DEFAULT_SEED})")
    parser.add_argument("--quad-order", type=int, help=f"Quadrature nodes per axis (default: {config.QUAD_ORDER})")
    parser.add_argument("--fd-step", type=float, help="Finite-difference step in t")
    parser.add_argument("--tol", type=float, help="Relative tolerance for functional derivatives")
    parser.add_argument("--trials", type=int, help="Random trials per identity")
    parser.add_argument("--amplitude", type=float, help="Perturbation amplitude for gauss-bonnet")
    parser.add_argument("--points", type=int, help="Sample points for pointwise checks")
    parser.add_argument("--out", help="Report path (default: standard output)")
    parser.add_argument("--format", choices=("json", "csv"), help="Report format (default: json)")
    parser.add_argument("--log-level", default=config.LOG_LEVEL, help="Logging level (default: %(default)s)")
    return parser


def load_manifest(args: argparse.Namespace, parser: Optional[ManifestParser] = None) -> Manifest:
    parser = parser or ManifestParser()
    if args.manifest:
        try:
            with open(args.manifest, encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as e:
            raise ManifestError([f"Cannot read manifest '{args.manifest}': {e}"]) from e
        except json.JSONDecodeError as e:
            raise ManifestError([f"Malformed JSON: {e}"]) from e
        if not isinstance(data, dict):
            raise ManifestError(["Manifest must be a JSON object"])
        data.setdefault("operation", args.command)
        if data["operation"] != args.command:
            raise ManifestError([f"manifest operation '{data['operation']}' does not match command '{args.command}'"])
        return parser.from_dict(data)
    return parser.from_flags(
        args.command, manifold=args.manifold, n=args.n, r=args.r, k=args.k, seed=args.seed,
        quad_order=args.quad_order, fd_step=args.fd_step, tol=args.tol, trials=args.trials,
        amplitude=args.amplitude, points=args.points, out=args.out, fmt=args.format,
    )


def exit_code(report: RunReport) -> int:
    if any(check.breakdown for check in report.checks):
        return EXIT_BREAKDOWN
    return EXIT_PASSED if report.passed else EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(asctime)s - %(levelname)s - %(message)s")
    try:
        manifest = load_manifest(args)
    except ManifestError as e:
        print("❌ Invalid manifest:", file=sys.stderr)
        for error in e.errors:
            print(f"   - {error}", file=sys.stderr)
        return EXIT_MANIFEST

    report = RunService().run(manifest)
    ReportWriter().write(report, manifest.output)

    failed = [check.name for check in report.checks if check.passed is False]
    print("=" * 50, file=sys.stderr)
    if report.passed:
        print(f"🎉 All {len(report.checks)} checks passed", file=sys.stderr)
    else:
        print(f"❌ {len(failed)} of {len(report.checks)} checks failed: {', '.join(failed)}", file=sys.stderr)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
