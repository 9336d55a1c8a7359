"""
Data Models - Pydantic schemas for manifests, check records and run reports
"""

from pydantic import BaseModel, ConfigDict, Field
from typing import Any, Dict, List, Literal, Optional

import config

Operation = Literal["invariants", "verify-identities", "variation", "gauss-bonnet", "einstein"]
CatalogId = Literal["flat_torus", "sphere", "product", "conformal_flat", "perturbed_sphere"]

# Manifest Models
class ManifoldSpec(BaseModel):
    """A catalog manifold and its construction parameters."""
    model_config = ConfigDict(extra="forbid")
    id: CatalogId = Field(description="Catalog identifier")
    params: Dict[str, Any] = Field(default_factory=dict, description="Constructor parameters, e.g. n and r")

class Tolerances(BaseModel):
    """Pass thresholds of the numerical checks."""
    model_config = ConfigDict(extra="forbid")
    identity: float = Field(default=config.SOLVE_TOL, gt=0, description="Relative tolerance of fiber identities")
    operator: float = Field(default=config.OPERATOR_TOL, gt=0, description="Tolerance of differential-operator checks")
    main_theorem: float = Field(default=config.MAIN_THEOREM_TOL, gt=0, description="Relative tolerance of the gradient formula")
    curvature_variation: float = Field(default=config.CURVATURE_VARIATION_TOL, gt=0, description="Pointwise tolerance of the curvature variation formula")
    gauss_bonnet: float = Field(default=config.GAUSS_BONNET_TOL, gt=0, description="Relative deviation allowed between metrics")
    einstein: float = Field(default=config.EINSTEIN_TOL, gt=0, description="Residual allowed for T_2k - λg")

class NumericSettings(BaseModel):
    """Finite-difference, quadrature and randomness settings of a run."""
    model_config = ConfigDict(extra="forbid")
    fd_step: float = Field(default=config.FUNCTIONAL_FD_STEPS[0], gt=0, description="Coarse step of the functional derivative")
    quad_order: int = Field(default=config.QUAD_ORDER, ge=1, le=64, description="Nodes per axis")
    tolerances: Tolerances = Field(default_factory=Tolerances)
    seed: int = Field(default=config.DEFAULT_SEED, ge=0, description="Seed of every random form and field")
    trials: int = Field(default=config.IDENTITY_TRIALS, ge=1, description="Random samples per identity")
    amplitude: float = Field(default=config.GB_AMPLITUDE, ge=0, description="Perturbation amplitude for Gauss-Bonnet invariance")
    points: int = Field(default=3, ge=1, description="Sample points per pointwise check")

class OutputSpec(BaseModel):
    """Where and how the report is written."""
    model_config = ConfigDict(extra="forbid")
    path: Optional[str] = Field(None, description="Report file; standard output when omitted")
    format: Literal["json", "csv"] = Field(default="json", description="Report format")

class Manifest(BaseModel):
    """A complete run description."""
    model_config = ConfigDict(extra="forbid")
    operation: Operation = Field(description="Command to run")
    manifold: Optional[ManifoldSpec] = Field(None, description="Catalog manifold, when the command needs one")
    dimension: Optional[int] = Field(None, ge=1, description="Dimension for fiber or Gauss-Bonnet suites")
    k: List[int] = Field(default_factory=lambda: [1], description="Orders k of h_2k and T_2k")
    numeric: NumericSettings = Field(default_factory=NumericSettings)
    output: OutputSpec = Field(default_factory=OutputSpec)

# Report Models
class CheckRecord(BaseModel):
    """One numerical check: compared values, tolerance and verdict."""
    name: str = Field(description="Short check identifier")
    anchor: str = Field(description="The statement being checked")
    values: Dict[str, Optional[float]] = Field(default_factory=dict, description="Compared and derived values")
    tolerance: Optional[float] = Field(None, description="Pass threshold")
    passed: Optional[bool] = Field(None, description="Verdict; None for measured-only records")
    provenance: Dict[str, str] = Field(default_factory=dict, description="How each compared value was obtained")
    error: Optional[str] = Field(None, description="Error message when the check could not complete")
    breakdown: bool = Field(default=False, description="True when a numerical breakdown stopped the check")

class VariationReport(BaseModel):
    """Finite-difference derivative of a functional against its closed-form pairing."""
    manifold: str = Field(description="Chart name")
    direction: str = Field(description="Label of the deformation direction h")
    k: int = Field(description="Order of H_2k")
    fd_value: float = Field(description="Finite-difference derivative")
    pairing_value: float = Field(description="Closed-form pairing")
    abs_err: float
    rel_err: float
    floor: float = Field(description="Lower bound of the relative-error scale")
    fd_step: List[float] = Field(description="Steps used by the Richardson pair")
    quadrature_order: int
    tolerance: float
    passed: bool
    extras: Dict[str, float] = Field(default_factory=dict, description="Auxiliary values, e.g. projected derivatives")

class GaussBonnetReport(BaseModel):
    """H_n over the round and perturbed spheres."""
    n: int
    values: List[float] = Field(description="H_n for the round sphere then each perturbed metric")
    labels: List[str]
    max_deviation: float = Field(description="Largest pairwise relative deviation")
    normalization: float = Field(description="H_n(S^n) / χ(S^n)")
    classical_ratio: Optional[float] = Field(None, description="H_2(S^2) / 4π when n = 2")
    excluded_measure: float
    tolerance: float
    passed: bool

class EinsteinCase(BaseModel):
    """einstein_deviation of one catalog manifold and order."""
    manifold: str
    k: int
    expectation: Literal["einstein", "zero", "measured"]
    lambda_: Optional[float] = Field(None, description="T_2k trace over n (mean over points)")
    residual: float = Field(description="max |T_2k - λg| over the sample points")
    t_norm: float = Field(description="max |T_2k| over the sample points")
    omega1_norm: Optional[float] = None
    consistent: Optional[bool] = None
    passed: Optional[bool] = None

class EinsteinReport(BaseModel):
    """Generalized Einstein examples."""
    cases: List[EinsteinCase]
    passed: bool

class RunReport(BaseModel):
    """Everything a run produced, in a stable field order."""
    manifest: Manifest
    version: str = Field(default=config.REPORT_VERSION)
    seed: int
    checks: List[CheckRecord]
    passed: bool
    timing: Dict[str, float] = Field(default_factory=dict, description="Wall-clock seconds per stage")
