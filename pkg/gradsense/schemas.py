"""
Pydantic schemas for gradsense run configurations and reports
"""
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .sensing import DistributionKind, SensorKind
from .spectral_core import BoundarySide

# A float is an absolute coordinate with no exact value; a string ("1/3",
# "0.25") is an exact ratio of the corresponding side length.
Coordinate = Union[float, str]


class StrictModel(BaseModel):
    """Unknown keys are rejected everywhere in a run configuration"""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class DomainConfig(StrictModel):
    """Side lengths: a number, "p/q" or "sqrt(k)" """
    a1: Union[float, str]
    a2: Union[float, str]


class GammaConfig(StrictModel):
    """Boundary region; lo/hi follow the Coordinate convention along the side"""
    side: BoundarySide = BoundarySide.TOP
    lo: Coordinate = "0"
    hi: Coordinate = "1"


class ModesConfig(StrictModel):
    J: int = Field(default=10, ge=1)
    grouping_tol: float = Field(default=1e-9, ge=0.0)


class DistributionConfig(StrictModel):
    kind: DistributionKind
    scale: float = 1.0
    expression: Optional[str] = None
    params: Dict[str, float] = Field(default_factory=dict)
    grid_u: Optional[List[float]] = None
    grid_v: Optional[List[float]] = None
    samples: Optional[List] = None


class SegmentConfig(StrictModel):
    side: BoundarySide
    lo: Coordinate
    hi: Coordinate


class SensorConfig(StrictModel):
    """One sensor.

    point: b for pointwise kinds, the centre of an internal zone, the
    symmetry centre of a filament (optional).  half_widths: absolute zone
    half widths (l1, l2).  segments: boundary-zone segments.  vertices:
    filament polyline.
    """
    kind: SensorKind
    point: Optional[Tuple[Coordinate, Coordinate]] = None
    half_widths: Optional[Tuple[float, float]] = None
    segments: Optional[List[SegmentConfig]] = None
    vertices: Optional[List[Tuple[Coordinate, Coordinate]]] = None
    distribution: Optional[DistributionConfig] = None
    symmetric: Optional[bool] = None
    label: Optional[str] = None


class TimeConfig(StrictModel):
    T: float = Field(default=1.0, gt=0.0)
    dt: Optional[float] = Field(default=None, gt=0.0)


class TolerancesConfig(StrictModel):
    rank_tol: float = Field(default=1e-10, gt=0.0)
    pd_tol: float = Field(default=1e-10, gt=0.0)


class QuadratureConfig(StrictModel):
    """None means 2J+2 points"""
    order: Optional[int] = Field(default=None, ge=2)
    line_order: Optional[int] = Field(default=None, ge=1)


class NoiseConfig(StrictModel):
    sigma: float = Field(default=0.0, ge=0.0)
    seed: Optional[int] = Field(default=None, ge=0)


class RegularizationConfig(StrictModel):
    """lambda = None selects sigma^2 times the sample count"""
    lambda_: Optional[float] = Field(default=None, ge=0.0, alias="lambda")


class ModeCoefficient(StrictModel):
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    value: float


class InitialStateConfig(StrictModel):
    kind: Literal["modes", "bump", "gaussian"] = "bump"
    coefficients: List[ModeCoefficient] = Field(default_factory=list)
    center: Optional[Tuple[Coordinate, Coordinate]] = None
    width: float = Field(default=0.1, gt=0.0)


class ScanConfig(StrictModel):
    """Grid of anchor locations in ratio units of the side lengths"""
    nx: int = Field(default=21, ge=1)
    ny: int = Field(default=21, ge=1)
    x_range: Tuple[float, float] = (0.0, 1.0)
    y_range: Tuple[float, float] = (0.0, 1.0)
    sensor: int = Field(default=0, ge=0)


class CrossingConfig(StrictModel):
    radius: float = Field(gt=0.0)


class RunConfig(StrictModel):
    domain: DomainConfig
    gamma: GammaConfig = Field(default_factory=GammaConfig)
    modes: ModesConfig = Field(default_factory=ModesConfig)
    sensors: List[SensorConfig] = Field(default_factory=list)
    time: TimeConfig = Field(default_factory=TimeConfig)
    tolerances: TolerancesConfig = Field(default_factory=TolerancesConfig)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    regularization: RegularizationConfig = Field(default_factory=RegularizationConfig)
    initial_state: InitialStateConfig = Field(default_factory=InitialStateConfig)
    scan: Optional[ScanConfig] = None
    crossing: Optional[CrossingConfig] = None
    trace_samples: Optional[int] = Field(default=None, ge=2)
    include_gramian: bool = True

    @field_validator("sensors")
    @classmethod
    def at_least_one_sensor(cls, sensors):
        if not sensors:
            raise ValueError("at least one sensor is required")
        return sensors


# Reports

class GroupReport(BaseModel):
    eigenvalue: float
    multiplicity: int
    rank: int
    sigma_min: float
    passed: bool
    modes: List[Tuple[int, int]]


class VerdictSummary(BaseModel):
    strategic: bool
    functional: str
    q: int
    r: int
    J: int
    sigma_max: float
    threshold: float
    sigma_min_overall: float
    margin: Optional[float] = None
    borderline: bool
    failing_groups: List[int]
    per_group: List[GroupReport]
    gamma: Optional[str] = None


class LocusSummary(BaseModel):
    sensor: int
    label: Optional[str] = None
    applicable: bool
    non_strategic_by_locus: bool
    matched_rule: str
    witness: str
    witness_mode: Optional[Tuple[int, int]] = None
    interpreted: bool = False


class GramianSummary(BaseModel):
    dimension: int
    T: float
    min_eigenvalue: float
    max_eigenvalue: float
    condition_number: Optional[float] = None
    whitened_min_eigenvalue: float
    whitened_max_eigenvalue: float
    pd_tol: float
    # positive_definite tests the whitened spectrum (independent of T);
    # positive_definite_raw tests the raw Gramian spectrum
    positive_definite: bool
    positive_definite_spectrum: Literal["whitened"] = "whitened"
    positive_definite_raw: bool


class CompletenessReport(BaseModel):
    rank: int
    required: int
    condition_number: Optional[float] = None
    ok: bool


class CrossingSummary(BaseModel):
    r_radius: float
    omega_r: str
    internal_pass: bool
    boundary_pass: bool
    implication_holds: bool
    sensors_in_collar: int


class VerdictReport(BaseModel):
    version: str
    config: RunConfig
    verdict: VerdictSummary
    state_verdict: VerdictSummary
    loci: List[LocusSummary]
    gramian: Optional[GramianSummary] = None
    completeness: CompletenessReport
    simple_spectrum: bool
    crossing: Optional[CrossingSummary] = None


class ScanRow(BaseModel):
    index: int
    x: Optional[float] = None
    y: Optional[float] = None
    s: Optional[float] = None
    strategic: Optional[bool] = None
    sigma_min: Optional[float] = None
    error: Optional[str] = None


class ReconstructionReport(BaseModel):
    version: str
    config: RunConfig
    regularization: float
    residual: float
    condition_number: Optional[float] = None
    err_gamma: Optional[float] = None
    err_boundary: Optional[float] = None
    coefficient_error: Optional[float] = None
    surrogate_norm: str
    estimated_coefficients: List[ModeCoefficient]


class ErrorResponse(BaseModel):
    error_type: str
    severity: str
    error_class: str
    message: str
    field_path: Optional[str] = None
    exit_code: int
    suggestions: List[str]
