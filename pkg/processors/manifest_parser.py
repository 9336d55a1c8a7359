"""
Manifest Parser - Validates run manifests from JSON text or command-line flags
"""

import json
import logging
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

import config
from core.catalog import CATALOG_IDS, dimension_of
from models.schemas import Manifest
from utils.errors import ManifestError

NEEDS_MANIFOLD = ("invariants", "variation")


class ManifestParser:
    """Turns manifest text or CLI values into a Manifest, collecting every validation error."""

    def parse(self, text: str) -> Manifest:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ManifestError([f"Malformed JSON: {e}"]) from e
        if not isinstance(data, dict):
            raise ManifestError(["Manifest must be a JSON object"])
        return self.from_dict(data)

    def from_dict(self, data: Dict[str, Any]) -> Manifest:
        errors = self._semantic_errors(data)
        manifest = None
        try:
            manifest = Manifest.model_validate(data)
        except ValidationError as e:
            for error in e.errors():
                location = ".".join(str(part) for part in error["loc"])
                if location.startswith("manifold.id") and any("unknown catalog id" in m for m in errors):
                    continue
                errors.append(f"{location}: {error['msg']}")
        if errors:
            logging.error(f"❌ Manifest rejected with {len(errors)} error(s)")
            raise ManifestError(errors)
        logging.info(f"✅ Manifest accepted: {manifest.operation}, k={manifest.k}, seed={manifest.numeric.seed}")
        return manifest

    def from_flags(self, operation: str, manifold: Optional[str] = None, n: Optional[int] = None,
                   r: Optional[float] = None, k: Optional[List[int]] = None, seed: Optional[int] = None,
                   quad_order: Optional[int] = None, fd_step: Optional[float] = None, tol: Optional[float] = None,
                   trials: Optional[int] = None, amplitude: Optional[float] = None, points: Optional[int] = None,
                   out: Optional[str] = None, fmt: Optional[str] = None) -> Manifest:
        """Manifest from inline flags; unset flags keep the schema defaults."""
        data: Dict[str, Any] = {"operation": operation}
        if manifold:
            params: Dict[str, Any] = {}
            if n is not None:
                params["n"] = n
            if r is not None:
                params["r"] = r
            data["manifold"] = {"id": manifold, "params": params}
        elif n is not None:
            data["dimension"] = n
        if k:
            data["k"] = list(k)
        numeric = {key: value for key, value in (("seed", seed), ("quad_order", quad_order), ("fd_step", fd_step),
                                                 ("trials", trials), ("amplitude", amplitude), ("points", points))
                   if value is not None}
        if tol is not None:
            numeric["tolerances"] = {"main_theorem": tol}
        if numeric:
            data["numeric"] = numeric
        output = {key: value for key, value in (("path", out), ("format", fmt)) if value is not None}
        if output:
            data["output"] = output
        return self.from_dict(data)

    def _semantic_errors(self, data: Dict[str, Any]) -> List[str]:
        errors: List[str] = []
        operation = data.get("operation")
        manifold = data.get("manifold")
        n: Optional[int] = None
        if isinstance(manifold, dict):
            manifold_errors = self._manifold_errors(manifold)
            errors.extend(manifold_errors)
            if not manifold_errors:
                n = dimension_of(manifold["id"], manifold.get("params") or {})
        elif operation in NEEDS_MANIFOLD:
            errors.append(f"operation '{operation}' needs a manifold")
        if n is None and isinstance(data.get("dimension"), int):
            n = data["dimension"]
        if operation == "gauss-bonnet" and data.get("dimension", 2) not in (2, 4):
            errors.append(f"gauss-bonnet runs for dimension 2 or 4, got {data.get('dimension')}")
        ks = data.get("k", [1])
        if isinstance(ks, list):
            for k in ks:
                if not isinstance(k, int):
                    continue
                if k < 1:
                    errors.append(f"k={k}: orders start at 1")
                elif n is not None and operation not in ("verify-identities", "gauss-bonnet") and 2 * k > n:
                    errors.append(f"k={k}: 2k exceeds n={n}")
        if n is not None and not 1 <= n <= config.MAX_DIMENSION:
            errors.append(f"dimension {n} outside 1..{config.MAX_DIMENSION}")
        numeric = data.get("numeric") or {}
        amplitude = numeric.get("amplitude") if isinstance(numeric, dict) else None
        if isinstance(amplitude, (int, float)) and amplitude >= 0.5:
            errors.append(f"amplitude {amplitude} too large to keep the perturbed metric well conditioned (< 0.5)")
        return errors

    def _manifold_errors(self, manifold: Dict[str, Any]) -> List[str]:
        identifier = manifold.get("id")
        params = manifold.get("params") or {}
        if identifier not in CATALOG_IDS:
            return [f"unknown catalog id '{identifier}'"]
        errors = []
        if identifier == "product":
            factors = params.get("factors")
            if not isinstance(factors, list) or len(factors) != 2:
                return ["product needs exactly two factors"]
            for factor in factors:
                if not isinstance(factor, dict):
                    errors.append("product factors must be objects with id and params")
                else:
                    errors.extend(self._manifold_errors(factor))
            return errors
        n = params.get("n", 2)
        if not isinstance(n, int):
            return [f"{identifier}: n must be an integer"]
        if identifier in ("sphere", "perturbed_sphere") and n < 2:
            errors.append(f"{identifier}: n must be at least 2")
        r = params.get("r", 1.0)
        if not isinstance(r, (int, float)) or r <= 0:
            errors.append(f"{identifier}: radius must be a positive number")
        amplitude = params.get("amplitude", config.GB_AMPLITUDE)
        if identifier == "perturbed_sphere" and not (isinstance(amplitude, (int, float)) and 0 <= amplitude < 0.5):
            errors.append("perturbed_sphere: amplitude must lie in [0, 0.5)")
        return errors
