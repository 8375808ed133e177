"""
Strategic-sensor decisions.

rank_test is the ground truth: per eigenvalue group it checks that the
q x r_n gradient-functional matrix has full column rank and that q >= r.
The Gramian test, the closed-form loci, the crossing check and location
scans are built around it.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np

from .errors import (
    EmptySuite,
    GradsenseError,
    InvalidRegion,
    IrrationalUnsupported,
    NonPositiveHorizon,
    RadiusTooLarge,
)
from .quadrature import QuadratureSpec, interval_rule
from .sensing import (
    GMatrix,
    Sensor,
    SensorKind,
    SensorSuite,
    gradient_matrix,
    output_matrix,
)
from .spectral_core import BoundaryRegion, ModeSet, RectDomain, eigengradient_matrix

logger = logging.getLogger(__name__)

# sigma_min within this factor of the rank threshold is reported as borderline
BORDERLINE_FACTOR = 10.0


@dataclass(frozen=True)
class GroupResult:
    eigenvalue: float
    multiplicity: int
    rank: int
    sigma_min: float
    passed: bool
    modes: Tuple[Tuple[int, int], ...] = ()


@dataclass(frozen=True)
class StrategicVerdict:
    """Outcome of a group-wise rank test at truncation J"""
    strategic: bool
    q: int
    r: int
    J: int
    per_group: Tuple[GroupResult, ...]
    sigma_max: float
    threshold: float
    rank_tol: float
    functional: str = "gradient"
    # gamma for boundary verdicts, the collar omega_r for internal ones
    gamma: Optional[Union[BoundaryRegion, "Collar"]] = None

    @property
    def failing_groups(self) -> List[int]:
        return [k for k, group in enumerate(self.per_group) if not group.passed]

    @property
    def sigma_min_overall(self) -> float:
        return min(group.sigma_min for group in self.per_group)

    @property
    def margin(self) -> float:
        """1/sigma_min_overall; infinite when some group is blind"""
        sigma = self.sigma_min_overall
        return math.inf if sigma <= 0 else 1.0 / sigma

    @property
    def borderline(self) -> bool:
        if self.threshold <= 0:
            return False
        return any(
            self.threshold / BORDERLINE_FACTOR <= group.sigma_min <= self.threshold * BORDERLINE_FACTOR
            for group in self.per_group
        )


def group_matrices(matrix: np.ndarray, modeset: ModeSet) -> List[GMatrix]:
    """Split a (q, N) functional matrix into one GMatrix per eigenvalue group"""
    return [
        GMatrix.from_entries(group.eigenvalue, matrix[:, block], group.modes)
        for group, block in zip(modeset.groups, modeset.group_slices)
    ]


def verdict_from_matrices(gmats: Sequence[GMatrix], modeset: ModeSet, q: int, rank_tol: float,
                          functional: str = "gradient",
                          gamma: Optional[Union[BoundaryRegion, "Collar"]] = None) -> StrategicVerdict:
    """Numerical ranks against rank_tol times the largest singular value over all groups"""
    if not rank_tol > 0:
        raise ValueError(f"rank_tol must be > 0, got {rank_tol}")
    sigma_max = max((float(g.singular_values[0]) for g in gmats if g.singular_values.size), default=0.0)
    threshold = rank_tol * sigma_max

    results = []
    for gmat in gmats:
        r_n = len(gmat.modes) or gmat.shape[1]
        sv = gmat.singular_values
        rank = 0 if sigma_max == 0 else int(np.count_nonzero(sv > threshold))
        sigma_min = float(sv[r_n - 1]) if sv.size >= r_n else 0.0
        results.append(GroupResult(
            eigenvalue=gmat.eigenvalue,
            multiplicity=r_n,
            rank=rank,
            sigma_min=sigma_min,
            passed=rank == r_n,
            modes=tuple(mode.index.as_tuple() for mode in gmat.modes),
        ))

    r = modeset.max_multiplicity
    strategic = q >= r and all(result.passed for result in results)
    verdict = StrategicVerdict(
        strategic=strategic, q=q, r=r, J=modeset.J, per_group=tuple(results),
        sigma_max=sigma_max, threshold=threshold, rank_tol=rank_tol,
        functional=functional, gamma=gamma,
    )
    for k, result in enumerate(results):
        logger.debug(f"group {k} lambda={result.eigenvalue:.6g} r_n={result.multiplicity} "
                     f"rank={result.rank} sigma_min={result.sigma_min:.3e}")
    if verdict.borderline:
        logger.warning(f"Borderline {functional} verdict: sigma_min {verdict.sigma_min_overall:.3e} "
                       f"is within {BORDERLINE_FACTOR:g}x of the threshold {threshold:.3e}")
    return verdict


def rank_test(suite: SensorSuite, modeset: ModeSet, gamma: BoundaryRegion, quad: QuadratureSpec,
              rank_tol: float = 1e-10) -> StrategicVerdict:
    """Group-wise rank condition on the gradient functionals.

    gamma is recorded as the region carrying the completeness assumption; the
    verdict itself depends only on the G_n matrices.
    """
    if suite.q == 0:
        raise EmptySuite("the sensor suite is empty")
    gamma.validate_in(modeset.domain)
    gmats = group_matrices(gradient_matrix(suite, modeset, quad), modeset)
    verdict = verdict_from_matrices(gmats, modeset, suite.q, rank_tol, "gradient", gamma)
    logger.debug(f"Rank test at J={modeset.J}: strategic={verdict.strategic} "
                 f"(q={verdict.q}, r={verdict.r}, failing groups={len(verdict.failing_groups)})")
    return verdict


def state_rank_test(suite: SensorSuite, modeset: ModeSet, quad: QuadratureSpec,
                    rank_tol: float = 1e-10) -> StrategicVerdict:
    """Same group-wise test on the value functionals, i.e. the output map itself"""
    if suite.q == 0:
        raise EmptySuite("the sensor suite is empty")
    gmats = group_matrices(output_matrix(suite, modeset, quad), modeset)
    return verdict_from_matrices(gmats, modeset, suite.q, rank_tol, "value")


# Gramian

@dataclass(frozen=True, eq=False)
class ObservabilityGramian:
    """Truncated observability Gramian in spectral coordinates.

    `eigenvalues` is the raw spectrum.  `whitened_eigenvalues` is the spectrum
    of (C^T C) restricted to same-group blocks, i.e. with the temporal kernel
    replaced by an orthonormal one; it has the same null space.
    """
    matrix: np.ndarray
    eigenvalues: np.ndarray
    whitened_eigenvalues: np.ndarray
    T: float

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def condition_number(self) -> float:
        low, high = self.min_eigenvalue, self.max_eigenvalue
        return math.inf if low <= 0 else high / low


def temporal_kernel(eigenvalues: np.ndarray, T: float) -> np.ndarray:
    """K_ab = int_0^T exp((l_a + l_b) t) dt in closed form"""
    total = eigenvalues[:, None] + eigenvalues[None, :]
    return np.expm1(total * T) / total


def same_group_mask(modeset: ModeSet) -> np.ndarray:
    mask = np.zeros((modeset.size, modeset.size), dtype=bool)
    for block in modeset.group_slices:
        mask[block, block] = True
    return mask


def gramian(suite: SensorSuite, modeset: ModeSet, T: float, quad: QuadratureSpec) -> ObservabilityGramian:
    if not (math.isfinite(T) and T > 0):
        raise NonPositiveHorizon(f"time horizon must be positive, got {T}", field_path="time.T")
    C = output_matrix(suite, modeset, quad)
    CtC = C.T @ C
    M = CtC * temporal_kernel(modeset.eigenvalues, T)
    M = 0.5 * (M + M.T)
    W = np.where(same_group_mask(modeset), CtC, 0.0)
    gram = ObservabilityGramian(
        matrix=M,
        eigenvalues=np.linalg.eigvalsh(M),
        whitened_eigenvalues=np.linalg.eigvalsh(0.5 * (W + W.T)),
        T=T,
    )
    logger.debug(f"Gramian {gram.dimension}x{gram.dimension}: eigenvalues in "
                 f"[{gram.min_eigenvalue:.3e}, {gram.max_eigenvalue:.3e}]")
    return gram


def positive_definite_test(gram: ObservabilityGramian, pd_tol: float = 1e-10, whitened: bool = True) -> bool:
    """min eigenvalue > pd_tol * max eigenvalue; the zero matrix is not positive definite.

    The default uses the whitened spectrum, which depends only on the
    same-group blocks of C^T C: the verdict does not depend on the horizon T
    and agrees with state_rank_test away from borderline cases.
    whitened=False tests the raw Gramian, whose spectrum spans the decades
    of exp(2 lambda T) and usually fails pd_tol for J > 2 even when the
    suite is strategic.
    """
    if not pd_tol > 0:
        raise ValueError(f"pd_tol must be > 0, got {pd_tol}")
    values = gram.whitened_eigenvalues if whitened else gram.eigenvalues
    high = float(values[-1])
    if high <= 0:
        return False
    return float(values[0]) > pd_tol * high


# Closed-form non-strategic loci

class LocusRule(str, Enum):
    """Report identifiers of the closed-form locus rules"""
    SYMMETRIC_ZONE = "cor_4_1"
    BOUNDARY_ZONE_ONE_SIDE = "cor_4_2_one_side"
    BOUNDARY_ZONE_TWO_SIDE = "cor_4_2_two_side"
    POINTWISE = "cor_4_3_pointwise"
    FILAMENT = "cor_4_3_filament"
    BOUNDARY_POINTWISE = "cor_4_4"
    NONE = "none"


@dataclass(frozen=True)
class LocusReport:
    applicable: bool
    non_strategic_by_locus: bool
    matched_rule: LocusRule
    witness: str
    witness_mode: Optional[Tuple[int, int]] = None
    interpreted: bool = False

    def __post_init__(self):
        if self.non_strategic_by_locus and not self.applicable:
            raise ValueError("a locus cannot fire on a sensor it does not apply to")


def _format_ratio(ratio: Optional[Fraction]) -> str:
    return "irrational" if ratio is None else str(ratio)


def _point_witness(r1: Fraction, r2: Fraction) -> Tuple[int, int]:
    """Smallest mode whose gradient functional vanishes at a centre with ratios (r1, r2).

    Both cosines vanish at (q1/2, q2/2) when both denominators are even,
    otherwise both sines vanish at (q1, q2).
    """
    q1, q2 = r1.denominator, r2.denominator
    if q1 % 2 == 0 and q2 % 2 == 0:
        return q1 // 2, q2 // 2
    return q1, q2


def _polyline_point_symmetric(vertices, center, domain: RectDomain) -> bool:
    verts = np.asarray(vertices, dtype=float)
    mirrored = 2.0 * np.asarray(center, dtype=float) - verts[::-1]
    return bool(np.allclose(verts, mirrored, rtol=0.0, atol=1e-12 * domain.scale))


def _declined(rule: LocusRule, reason: str) -> LocusReport:
    return LocusReport(applicable=False, non_strategic_by_locus=False, matched_rule=rule, witness=reason)


def _irrational(rule: LocusRule, what: str, strict: bool, interpreted: bool = False) -> LocusReport:
    if strict:
        raise IrrationalUnsupported(f"{what} has no exact rational value; use the rank test")
    return LocusReport(
        applicable=True, non_strategic_by_locus=False, matched_rule=rule,
        witness=f"{what} is flagged irrational; the rationality condition cannot hold for every index",
        interpreted=interpreted,
    )


def _fired(rule: LocusRule, mode: Tuple[int, int], J: int, detail: str, interpreted: bool = False) -> LocusReport:
    n, m = mode
    fires = n <= J and m <= J
    suffix = "" if fires else f"; witness mode lies beyond J={J}"
    return LocusReport(
        applicable=True, non_strategic_by_locus=fires, matched_rule=rule,
        witness=f"{detail}; gradient functional vanishes on mode ({n}, {m}){suffix}",
        witness_mode=mode, interpreted=interpreted,
    )


def locus_check(sensor: Sensor, domain: RectDomain, gamma: BoundaryRegion, J: int,
                strict: bool = False) -> LocusReport:
    """Match a sensor against the closed-form non-strategic loci at truncation J.

    A fired locus names a mode n, m <= J whose gradient-functional column is
    zero, so the rank test at the same J must fail.  A declined or unfired
    locus makes no positive claim.  With strict=True an irrational-flagged
    coordinate raises IrrationalUnsupported instead of reporting "not fired".
    """
    if J < 1:
        raise ValueError(f"truncation J must be >= 1, got {J}")
    gamma.validate_in(domain)
    kind = sensor.kind
    ratios = tuple(sensor.ratios)

    if kind is SensorKind.BOUNDARY_POINTWISE:
        return _boundary_point_locus(sensor, domain, J, ratios, strict)
    if kind is SensorKind.BOUNDARY_ZONE:
        return _boundary_zone_locus(sensor, domain, J, ratios, strict)

    rule = {
        SensorKind.INTERNAL_ZONE: LocusRule.SYMMETRIC_ZONE,
        SensorKind.INTERNAL_POINTWISE: LocusRule.POINTWISE,
        SensorKind.FILAMENT: LocusRule.FILAMENT,
    }[kind]
    interpreted = kind is SensorKind.FILAMENT
    if kind is not SensorKind.INTERNAL_POINTWISE and not sensor.is_symmetric:
        return _declined(LocusRule.NONE, "distribution is not symmetric about the support centre")
    if kind is SensorKind.FILAMENT and not _polyline_point_symmetric(sensor.vertices, sensor.point, domain):
        return _declined(LocusRule.NONE, "filament is not symmetric about its centre")

    r1, r2 = (ratios + (None, None))[:2]
    if r1 is None:
        return _irrational(rule, "b1/a1", strict, interpreted)
    if r2 is None:
        return _irrational(rule, "b2/a2", strict, interpreted)
    mode = _point_witness(r1, r2)
    return _fired(rule, mode, J, f"centre ratios ({r1}, {r2}) are rational", interpreted)


def _boundary_point_locus(sensor: Sensor, domain: RectDomain, J: int, ratios, strict: bool) -> LocusReport:
    """Only the normal derivative survives on a side, so one wave index decides.

    Vertical sides depend on m b2/a2; on horizontal sides b2/a2 is 0 or 1 and
    the condition is read on n b1/a1 instead (interpreted).
    """
    side = sensor.boundary_side(domain)
    r1, r2 = (ratios + (None, None))[:2]
    if side.is_horizontal:
        if r1 is None:
            return _irrational(LocusRule.BOUNDARY_POINTWISE, "b1/a1", strict, interpreted=True)
        return _fired(LocusRule.BOUNDARY_POINTWISE, (r1.denominator, 1), J,
                      f"b1/a1 = {r1} on the {side.value} side", interpreted=True)
    if r2 is None:
        return _irrational(LocusRule.BOUNDARY_POINTWISE, "b2/a2", strict)
    return _fired(LocusRule.BOUNDARY_POINTWISE, (1, r2.denominator), J,
                  f"b2/a2 = {r2} on the {side.value} side")


def _boundary_zone_locus(sensor: Sensor, domain: RectDomain, J: int, ratios, strict: bool) -> LocusReport:
    rule = LocusRule.BOUNDARY_ZONE_ONE_SIDE if len(sensor.segments) == 1 else LocusRule.BOUNDARY_ZONE_TWO_SIDE
    if not sensor.is_symmetric:
        return _declined(LocusRule.NONE, "distribution is not symmetric about the segment centre")
    ratios = (ratios + (None,) * len(sensor.segments))[:len(sensor.segments)]
    n, m = 1, 1
    described = []
    for segment, ratio in zip(sensor.segments, ratios):
        if ratio is None:
            return _irrational(rule, f"centre of {segment.describe()}", strict)
        if segment.side.is_horizontal:
            n = n * ratio.denominator // math.gcd(n, ratio.denominator)
        else:
            m = m * ratio.denominator // math.gcd(m, ratio.denominator)
        described.append(f"{segment.side.value} centre ratio {ratio}")
    return _fired(rule, (n, m), J, ", ".join(described))


# Crossing approach

@dataclass(frozen=True)
class Collar:
    """omega_r: points of the open domain closer than `radius` to gamma"""
    domain: RectDomain
    gamma: BoundaryRegion
    radius: float

    def _segment(self) -> Tuple[np.ndarray, np.ndarray]:
        ends = self.gamma.point_at(self.domain, np.array([self.gamma.lo, self.gamma.hi]))
        return ends[0], ends[1]

    def distance(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        start, end = self._segment()
        direction = end - start
        t = np.clip((p - start) @ direction / float(direction @ direction), 0.0, 1.0)
        nearest = start + t[:, None] * direction
        return np.hypot(*(p - nearest).T)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (self.distance(p) < self.radius) & self.domain.contains(p, closed=False)

    @property
    def farthest_distance(self) -> float:
        """Largest distance from gamma to a point of the closed domain (attained at a corner)"""
        return float(self.distance(self.domain.corners).max())

    def describe(self) -> str:
        return f"{{p in Omega : dist(p, {self.gamma.describe()}) < {self.radius:.6g}}}"


@dataclass(frozen=True)
class CrossingReport:
    r_radius: float
    omega_r: str
    internal_pass: bool
    boundary_pass: bool
    sensors_in_collar: int = 0
    internal_verdict: Optional[StrategicVerdict] = None
    boundary_verdict: Optional[StrategicVerdict] = None

    @property
    def implication_holds(self) -> bool:
        return not (self.internal_pass and not self.boundary_pass)


def crossing_check(suite: SensorSuite, modeset: ModeSet, gamma: BoundaryRegion, r_radius: float,
                   quad: QuadratureSpec, rank_tol: float = 1e-10) -> CrossingReport:
    """Internal test on the collar omega_r and boundary test on gamma from the same G_n"""
    domain = modeset.domain
    if not (math.isfinite(r_radius) and r_radius > 0):
        raise InvalidRegion(f"collar radius must be positive, got {r_radius}")
    collar = Collar(domain, gamma.validate_in(domain), r_radius)
    if r_radius >= collar.farthest_distance:
        raise RadiusTooLarge(
            f"radius {r_radius:g} reaches every point of the domain "
            f"(farthest distance {collar.farthest_distance:.6g})"
        )
    if suite.q == 0:
        raise EmptySuite("the sensor suite is empty")

    gmats = group_matrices(gradient_matrix(suite, modeset, quad), modeset)
    internal = verdict_from_matrices(gmats, modeset, suite.q, rank_tol, "gradient", collar)
    boundary = verdict_from_matrices(gmats, modeset, suite.q, rank_tol, "gradient", gamma)

    anchors = [sensor.point for sensor in suite if sensor.point is not None]
    inside = int(np.count_nonzero(collar.contains(anchors))) if anchors else 0
    report = CrossingReport(
        r_radius=r_radius, omega_r=collar.describe(),
        internal_pass=internal.strategic, boundary_pass=boundary.strategic,
        sensors_in_collar=inside, internal_verdict=internal, boundary_verdict=boundary,
    )
    logger.info(f"Crossing check r={r_radius:g}: internal={report.internal_pass} "
                f"boundary={report.boundary_pass} implication={report.implication_holds}")
    return report


# Completeness surrogate on gamma

@dataclass(frozen=True)
class CompletenessDiagnostic:
    rank: int
    required: int
    condition_number: float

    @property
    def ok(self) -> bool:
        return self.rank >= self.required


def completeness_diagnostic(modeset: ModeSet, gamma: BoundaryRegion, quad: QuadratureSpec,
                            rank_tol: float = 1e-10) -> CompletenessDiagnostic:
    """Numerical rank of the Gram matrix of traced gradient profiles on gamma.

    On one side the profiles of (n, m) and (n, m') are parallel, so J
    independent profiles is the most a single segment can carry.  The
    condition number is taken over the leading J singular directions.
    """
    domain = modeset.domain
    n_points = max(quad.line_order, 4 * modeset.J + 4)
    s, w = interval_rule(n_points, gamma.lo, gamma.hi)
    grads = eigengradient_matrix(modeset, gamma.point_at(domain, s))
    weighted = np.sqrt(w)[:, None, None] * grads
    profiles = np.concatenate([weighted[:, :, 0], weighted[:, :, 1]], axis=0)
    sv = np.linalg.svd(profiles, compute_uv=False)
    gram_spectrum = sv ** 2
    top = float(gram_spectrum[0]) if gram_spectrum.size else 0.0
    rank = 0 if top == 0 else int(np.count_nonzero(gram_spectrum > rank_tol * top))
    required = modeset.J
    if rank >= required and gram_spectrum[required - 1] > 0:
        condition = top / float(gram_spectrum[required - 1])
    else:
        condition = math.inf
    return CompletenessDiagnostic(rank=rank, required=required, condition_number=condition)


# Location scans

@dataclass(frozen=True)
class ScanRecord:
    index: int
    location: Tuple[float, ...]
    strategic: Optional[bool]
    sigma_min_overall: Optional[float]
    threshold: Optional[float] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def scan_locations(template: Sensor, grid: Sequence, modeset: ModeSet, gamma: BoundaryRegion,
                   quad: QuadratureSpec, rank_tol: float = 1e-10, threads: int = 1,
                   fixed: SensorSuite = SensorSuite()) -> List[ScanRecord]:
    """rank_test with the template relocated to each grid location.

    Locations are points for internal kinds and arc coordinates for boundary
    kinds.  `fixed` sensors are kept in place ahead of the scanned one.
    Per-location errors become failed records; output order follows `grid`.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("scan grid is empty")

    def evaluate(item):
        index, location = item
        loc = tuple(float(v) for v in np.atleast_1d(np.asarray(location, dtype=float)))
        try:
            sensor = template.relocated(loc if len(loc) > 1 else loc[0], modeset.domain)
            verdict = rank_test(fixed.with_sensor(sensor), modeset, gamma, quad, rank_tol)
            return ScanRecord(index, loc, verdict.strategic, verdict.sigma_min_overall, verdict.threshold)
        except (GradsenseError, ValueError) as error:
            logger.warning(f"Scan point {index} at {loc} failed: {type(error).__name__}: {error}")
            return ScanRecord(index, loc, None, None, None, f"{type(error).__name__}: {error}")

    items = list(enumerate(grid))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            records = list(executor.map(evaluate, items))
    else:
        records = [evaluate(item) for item in items]

    failed = sum(record.failed for record in records)
    logger.info(f"Scanned {len(records)} locations ({failed} failed) with {threads} thread(s)")
    return records
