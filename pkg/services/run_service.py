"""
Run Service - Dispatches a manifest to the verification services and assembles the run report
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple

import numpy as np

import config
from core.catalog import ChartSymbols, MetricDeformation, compile_chart, from_spec
from core.double_forms import first_bianchi_residual
from core.geometry import riemann
from core.invariants import constant_curvature_h, invariant_bundle
from models.schemas import CheckRecord, EinsteinReport, Manifest, RunReport, VariationReport
from services.einstein_service import EinsteinService
from services.identity_service import IdentityService
from services.variation_service import VariationService, sample_points
from utils.errors import GBCError, NumericalBreakdownError
from utils.random_fields import named_rng, random_harmonic_expr, random_symmetric_expr

Task = Tuple[str, Callable[[], List[CheckRecord]]]


def variation_record(name: str, anchor: str, report: VariationReport) -> CheckRecord:
    values = {"fd_value": report.fd_value, "pairing_value": report.pairing_value,
              "abs_err": report.abs_err, "rel_err": report.rel_err, "floor": report.floor}
    values.update(report.extras)
    return CheckRecord(
        name=name, anchor=anchor, values=values, tolerance=report.tolerance, passed=report.passed,
        provenance={"fd_value": f"central differences at t={report.fd_step} with Richardson extrapolation",
                    "pairing_value": f"tensor-product quadrature of order {report.quadrature_order}"},
    )


class RunService:
    """Service that runs a validated manifest and collects every check in submission order."""

    def __init__(self, threads=config.THREADS):
        self.threads = threads

    def run(self, manifest: Manifest) -> RunReport:
        start = time.perf_counter()
        tasks = self._plan(manifest)
        logging.info(f"🚀 Running '{manifest.operation}' with {len(tasks)} task(s), seed {manifest.numeric.seed}")
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = [pool.submit(self._guarded, label, task) for label, task in tasks]
            results = [future.result() for future in futures]
        checks = [record for records in results for record in records]
        passed = all(check.passed is not False for check in checks)
        elapsed = time.perf_counter() - start
        logging.info(f"{'🎉' if passed else '❌'} {sum(c.passed is True for c in checks)}/{len(checks)} checks passed "
                     f"in {elapsed:.1f}s")
        return RunReport(manifest=manifest, seed=manifest.numeric.seed, checks=checks, passed=passed,
                         timing={"total_seconds": elapsed})

    def _guarded(self, label: str, task: Callable[[], List[CheckRecord]]) -> List[CheckRecord]:
        try:
            return task()
        except NumericalBreakdownError as e:
            logging.error(f"❌ {label}: numerical breakdown: {e}")
            return [CheckRecord(name=label, anchor="numerical breakdown", passed=False, error=str(e), breakdown=True)]
        except GBCError as e:
            logging.error(f"❌ {label}: {e}")
            return [CheckRecord(name=label, anchor="library error", passed=False, error=str(e))]

    def _plan(self, manifest: Manifest) -> List[Task]:
        planners = {
            "invariants": self._plan_invariants,
            "verify-identities": self._plan_identities,
            "variation": self._plan_variation,
            "gauss-bonnet": self._plan_gauss_bonnet,
            "einstein": self._plan_einstein,
        }
        return planners[manifest.operation](manifest)

    def _symbols(self, manifest: Manifest) -> ChartSymbols:
        return from_spec(manifest.manifold.id, manifest.manifold.params)

    def _variation_service(self, manifest: Manifest) -> VariationService:
        numeric = manifest.numeric
        return VariationService(quad_order=numeric.quad_order, fd_steps=(numeric.fd_step, numeric.fd_step / 2),
                                tolerance=numeric.tolerances.main_theorem)

    # --- invariants ---

    def _plan_invariants(self, manifest: Manifest) -> List[Task]:
        symbols = self._symbols(manifest)
        return [(f"invariants:{symbols.name}:k{k}", lambda k=k: [self._invariant_check(manifest, symbols, k)])
                for k in manifest.k]

    def _invariant_check(self, manifest: Manifest, symbols: ChartSymbols, k: int) -> CheckRecord:
        chart = compile_chart(symbols)
        numeric = manifest.numeric
        pts = sample_points(chart, numeric.points, named_rng(numeric.seed, f"invariants:{symbols.name}"))
        R = riemann(chart, pts)
        bundle = invariant_bundle(R, k)
        h2k = np.atleast_1d(bundle.h2k)
        bianchi = first_bianchi_residual(R.form)
        service = self._variation_service(manifest)
        total = service.integrate_invariant(service.atlas_for(chart), k)
        values = {"h2k_mean": float(h2k.mean()), "h2k_spread": float(h2k.max() - h2k.min()),
                  "H2k": total, "bianchi_residual": bianchi}
        passed = bianchi <= config.SYMMETRY_TOL * (1.0 + R.form.max_abs())
        provenance = {"h2k": "star route, cross-checked against full contraction",
                      "H2k": f"quadrature of order {numeric.quad_order}"}
        if manifest.manifold.id == "sphere":
            r = float(manifest.manifold.params.get("r", 1.0))
            closed = constant_curvature_h(chart.dim, k, 1.0 / r ** 2)
            values["closed_form"] = closed
            passed = passed and float(np.max(np.abs(h2k - closed))) <= numeric.tolerances.identity * (1.0 + closed)
            provenance["closed_form"] = "(κ/2)^k n!/(n-2k)!"
        return CheckRecord(name=f"invariants:{symbols.name}:k{k}", anchor="h_2k, T_2k and trace T_2k = (n-2k)h_2k",
                           values=values, tolerance=numeric.tolerances.identity, passed=passed, provenance=provenance)

    # --- verify-identities ---

    def _plan_identities(self, manifest: Manifest) -> List[Task]:
        numeric = manifest.numeric
        n = manifest.dimension or (compile_chart(self._symbols(manifest)).dim if manifest.manifold else 4)
        service = IdentityService(seed=numeric.seed, trials=numeric.trials, tolerance=numeric.tolerances.identity,
                                  operator_tolerance=numeric.tolerances.operator)
        return [(f"fiber:n{n}", lambda: service.fiber_suite(n)),
                ("operators", lambda: service.operator_suite(points=numeric.points))]

    # --- variation ---

    def _plan_variation(self, manifest: Manifest) -> List[Task]:
        symbols = self._symbols(manifest)
        numeric = manifest.numeric
        service = self._variation_service(manifest)
        rng = named_rng(numeric.seed, f"variation:{symbols.name}")
        directions = [
            MetricDeformation.metric_direction(symbols),
            MetricDeformation.general(symbols, random_symmetric_expr(rng, symbols, scale=0.3), label="random h"),
            MetricDeformation.conformal(symbols, random_harmonic_expr(rng, symbols, scale=0.3), label="f g"),
        ]
        tasks: List[Task] = []
        for k in manifest.k:
            for deformation in directions:
                tasks.append((f"main-theorem:{symbols.name}:k{k}:{deformation.label}",
                              lambda d=deformation, k=k: [variation_record(
                                  f"main-theorem:{symbols.name}:k{k}:{d.label}",
                                  "d/dt H_2k(g + th) = ½∫⟨T_2k, h⟩", service.verify_main_theorem(d, k))]))
            if 2 * k < symbols.dim:
                tasks.append((f"conformal:{symbols.name}:k{k}",
                              lambda k=k: [variation_record(
                                  f"conformal:{symbols.name}:k{k}", "d/dt H_2k((1 + tf)g) = ½(n-2k)∫ f h_2k",
                                  service.verify_conformal_variation(directions[2], k))]))
        tasks.append((f"volume:{symbols.name}", lambda: [variation_record(
            f"volume:{symbols.name}", "d/dt vol(g + th) = ½∫ tr_g h", service.verify_volume_derivative(directions[1]))]))
        tasks.append((f"curvature-variation:{symbols.name}",
                      lambda: [self._curvature_variation_check(manifest, service, directions[1])]))
        return tasks

    def _curvature_variation_check(self, manifest: Manifest, service: VariationService,
                                   deformation: MetricDeformation) -> CheckRecord:
        numeric = manifest.numeric
        chart = deformation.chart_at(0.0)
        pts = sample_points(chart, numeric.points, named_rng(numeric.seed, f"curvature-variation:{chart.name}"))
        residual = service.verify_curvature_variation(deformation, pts)
        tolerance = numeric.tolerances.curvature_variation
        return CheckRecord(
            name=f"curvature-variation:{chart.name}", anchor="R'h = -¼(DD̃ + D̃D)h + ¼F_h(R)",
            values={"residual": residual}, tolerance=tolerance, passed=residual <= tolerance,
            provenance={"lhs": f"five-point derivative in t, step {config.CURVATURE_VARIATION_FD_STEP}",
                        "rhs": "second covariant derivatives from finite-difference jets"},
        )

    # --- gauss-bonnet ---

    def _plan_gauss_bonnet(self, manifest: Manifest) -> List[Task]:
        n = manifest.dimension or 2
        numeric = manifest.numeric
        service = self._variation_service(manifest)

        def task() -> List[CheckRecord]:
            report = service.verify_gb_invariance(n, numeric.amplitude, numeric.seed,
                                                  tolerance=numeric.tolerances.gauss_bonnet)
            values = {f"H{n}:{label}": value for label, value in zip(report.labels, report.values)}
            values.update({"max_deviation": report.max_deviation, "normalization": report.normalization,
                           "excluded_measure": report.excluded_measure})
            records = [CheckRecord(
                name=f"gauss-bonnet:n{n}", anchor="H_n does not depend on the metric", values=values,
                tolerance=report.tolerance, passed=report.passed,
                provenance={"values": f"quadrature of order {service.quad_order}, poles excised at {service.pole_margin}"},
            )]
            if report.classical_ratio is not None:
                gap = abs(report.classical_ratio - 1.0)
                records.append(CheckRecord(
                    name="gauss-bonnet:S2", anchor="H_2(S^2) = 4π", values={"ratio": report.classical_ratio, "gap": gap},
                    tolerance=config.CLASSICAL_GB_TOL, passed=gap <= config.CLASSICAL_GB_TOL,
                    provenance={"ratio": "H_2 of the round sphere over 4π"},
                ))
            return records

        return [(f"gauss-bonnet:n{n}", task)]

    # --- einstein ---

    def _plan_einstein(self, manifest: Manifest) -> List[Task]:
        numeric = manifest.numeric
        service = EinsteinService(seed=numeric.seed, points=numeric.points, tolerance=numeric.tolerances.einstein)
        if manifest.manifold is not None:
            symbols = self._symbols(manifest)

            def measured() -> List[CheckRecord]:
                cases = [service.evaluate_case(symbols, k, "measured") for k in manifest.k]
                return service.case_records(EinsteinReport(cases=cases, passed=True))

            return [(f"einstein:{symbols.name}", measured)]
        tasks: List[Task] = [("einstein-examples", lambda: service.case_records(service.einstein_examples_suite()))]
        for n in (5, 6):
            tasks.append((f"primitive-equivalence:n{n}",
                          lambda n=n: [service.primitive_equivalence_sweep(n, max(numeric.trials, 50))]))
        return tasks
