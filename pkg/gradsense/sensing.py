"""
Sensors, their spatial distributions, and the sensor functionals.

Two functionals are applied to the eigenfunctions:
  * the gradient functional sum_k <d phi/d x_k, f>_D, which fills the G_n
    matrices of the rank test;
  * the value functional <phi, f>_D, which is the output operator.
Pointwise kinds evaluate at b, zones use area quadrature, boundary zones
and filaments use arclength quadrature.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import (
    EmptySuite,
    InvalidSensorGeometry,
    ModeSetMismatch,
    UnsupportedCombination,
)
from .quadrature import QuadratureSpec, box_rule, check_resolvable, interval_rule, polyline_rule
from .spectral_core import (
    BOUNDARY_ORDER,
    EDGE_TOL,
    BoundaryRegion,
    BoundarySide,
    EigenGroup,
    Mode,
    ModeSet,
    RectDomain,
    StateCoeffs,
    eigenfunction_matrix,
    eigengradient_matrix,
    eval_eigenfunction,
    eval_eigengradient,
)

logger = logging.getLogger(__name__)


class SensorKind(str, Enum):
    INTERNAL_POINTWISE = "internal_pointwise"
    INTERNAL_ZONE = "internal_zone"
    BOUNDARY_ZONE = "boundary_zone"
    BOUNDARY_POINTWISE = "boundary_pointwise"
    FILAMENT = "filament"

    @property
    def is_pointwise(self) -> bool:
        return self in (SensorKind.INTERNAL_POINTWISE, SensorKind.BOUNDARY_POINTWISE)

    @property
    def is_boundary(self) -> bool:
        return self in (SensorKind.BOUNDARY_ZONE, SensorKind.BOUNDARY_POINTWISE)


class DistributionKind(str, Enum):
    DIRAC = "dirac"
    UNIFORM = "uniform"
    ANALYTIC = "analytic"
    TABULATED = "tabulated"


# Named distributions in local support coordinates (u, v) in [-1, 1]^2.
# Line supports use v = 0.  The flag says whether f is point-symmetric
# about the support centre.
def _gaussian(u, v, params):
    width = params.get("width", 0.5)
    return np.exp(-(u ** 2 + v ** 2) / (2.0 * width ** 2))


def _tent(u, v, params):
    return (1.0 - np.abs(u)) * (1.0 - np.abs(v))


def _cosine(u, v, params):
    return np.cos(0.5 * math.pi * u) * np.cos(0.5 * math.pi * v)


def _ramp(u, v, params):
    return 1.0 + params.get("slope", 0.5) * u


ANALYTIC_DISTRIBUTIONS: Dict[str, Tuple[Callable, bool]] = {
    "gaussian": (_gaussian, True),
    "tent": (_tent, True),
    "cosine": (_cosine, True),
    "ramp": (_ramp, False),
}


@dataclass(frozen=True)
class SpatialDistribution:
    """Measurement distribution f on a sensor support"""
    kind: DistributionKind
    scale: float = 1.0
    expression: Optional[str] = None
    params: Tuple[Tuple[str, float], ...] = ()
    grid_u: Optional[Tuple[float, ...]] = None
    grid_v: Optional[Tuple[float, ...]] = None
    samples: Optional[Tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DistributionKind(self.kind))
        if not math.isfinite(self.scale):
            raise ValueError(f"distribution scale must be finite, got {self.scale}")
        if self.kind is DistributionKind.ANALYTIC and self.expression not in ANALYTIC_DISTRIBUTIONS:
            raise ValueError(
                f"unknown analytic distribution {self.expression!r}; "
                f"expected one of {sorted(ANALYTIC_DISTRIBUTIONS)}"
            )
        if self.kind is DistributionKind.TABULATED:
            self._validate_table()

    def _validate_table(self):
        if self.grid_u is None or self.samples is None:
            raise ValueError("tabulated distribution needs grid_u and samples")
        for name, grid in (("grid_u", self.grid_u), ("grid_v", self.grid_v)):
            if grid is None:
                continue
            g = np.asarray(grid, dtype=float)
            if g.size < 2 or np.any(np.diff(g) <= 0):
                raise ValueError(f"tabulated {name} must be strictly increasing with at least 2 samples")
            if g[0] < -1 - EDGE_TOL or g[-1] > 1 + EDGE_TOL:
                raise ValueError(f"tabulated {name} must lie in the local support interval [-1, 1]")
        values = np.asarray(self.samples, dtype=float)
        expected = (len(self.grid_u),) if self.grid_v is None else (len(self.grid_u), len(self.grid_v))
        if values.shape != expected:
            raise ValueError(f"tabulated samples have shape {values.shape}, expected {expected}")

    @classmethod
    def dirac(cls, scale: float = 1.0) -> "SpatialDistribution":
        return cls(DistributionKind.DIRAC, scale=scale)

    @classmethod
    def uniform(cls, scale: float = 1.0) -> "SpatialDistribution":
        return cls(DistributionKind.UNIFORM, scale=scale)

    @classmethod
    def analytic(cls, expression: str, scale: float = 1.0, **params: float) -> "SpatialDistribution":
        return cls(DistributionKind.ANALYTIC, scale=scale, expression=expression,
                   params=tuple(sorted((k, float(v)) for k, v in params.items())))

    @classmethod
    def tabulated(cls, grid_u: Sequence[float], samples, grid_v: Optional[Sequence[float]] = None,
                  scale: float = 1.0) -> "SpatialDistribution":
        values = np.asarray(samples, dtype=float)
        table = tuple(values.tolist()) if values.ndim == 1 else tuple(tuple(row) for row in values.tolist())
        return cls(DistributionKind.TABULATED, scale=scale,
                   grid_u=tuple(float(u) for u in grid_u),
                   grid_v=None if grid_v is None else tuple(float(v) for v in grid_v),
                   samples=table)

    def scaled(self, alpha: float) -> "SpatialDistribution":
        return replace(self, scale=self.scale * alpha)

    @property
    def symmetric(self) -> bool:
        """Point symmetry about the support centre"""
        if self.kind in (DistributionKind.DIRAC, DistributionKind.UNIFORM):
            return True
        if self.kind is DistributionKind.ANALYTIC:
            return ANALYTIC_DISTRIBUTIONS[self.expression][1]
        grids_symmetric = all(
            grid is None or np.allclose(np.asarray(grid), -np.asarray(grid)[::-1], atol=1e-12)
            for grid in (self.grid_u, self.grid_v)
        )
        values = np.asarray(self.samples, dtype=float)
        flipped = values[::-1] if values.ndim == 1 else values[::-1, ::-1]
        return grids_symmetric and np.allclose(values, flipped, rtol=1e-12, atol=1e-14)

    def evaluate(self, u, v=None) -> np.ndarray:
        """f at local coordinates; v is None on line supports"""
        u = np.asarray(u, dtype=float)
        if self.kind is DistributionKind.DIRAC or self.kind is DistributionKind.UNIFORM:
            return np.full(u.shape, self.scale)
        if self.kind is DistributionKind.ANALYTIC:
            func, _ = ANALYTIC_DISTRIBUTIONS[self.expression]
            vv = np.zeros_like(u) if v is None else np.asarray(v, dtype=float)
            return self.scale * func(u, vv, dict(self.params))
        values = np.asarray(self.samples, dtype=float)
        if self.grid_v is None:
            return self.scale * np.interp(u, self.grid_u, values, left=0.0, right=0.0)
        if v is None:
            raise UnsupportedCombination("a 2-D tabulated distribution needs an area support")
        interpolator = RegularGridInterpolator(
            (np.asarray(self.grid_u), np.asarray(self.grid_v)), values,
            bounds_error=False, fill_value=0.0,
        )
        return self.scale * interpolator(np.column_stack([u.ravel(), np.asarray(v).ravel()])).reshape(u.shape)


RatioTuple = Tuple[Optional[Fraction], ...]


@dataclass(frozen=True)
class Sensor:
    """A sensor (D, f).

    Geometry by kind:
      internal_pointwise / boundary_pointwise: `point` is b
      internal_zone: `point` is the centre, `half_widths` = (l1, l2)
      boundary_zone: `segments` (one or two boundary intervals)
      filament: `vertices` of the polyline, `point` its symmetry centre
    `ratios` holds exact anchor coordinates for the locus rules: (b1/a1, b2/a2)
    for point-anchored kinds, one centre/side-length ratio per segment for
    boundary zones.  None marks a coordinate with no exact value.
    """
    kind: SensorKind
    distribution: SpatialDistribution
    point: Optional[Tuple[float, float]] = None
    half_widths: Optional[Tuple[float, float]] = None
    segments: Tuple[BoundaryRegion, ...] = ()
    vertices: Tuple[Tuple[float, float], ...] = ()
    ratios: RatioTuple = ()
    symmetric: Optional[bool] = None
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SensorKind(self.kind))
        if self.point is not None:
            object.__setattr__(self, "point", (float(self.point[0]), float(self.point[1])))

    @classmethod
    def pointwise(cls, b, scale: float = 1.0, ratios: RatioTuple = (), label: Optional[str] = None) -> "Sensor":
        return cls(SensorKind.INTERNAL_POINTWISE, SpatialDistribution.dirac(scale), point=tuple(b),
                   ratios=ratios, label=label)

    @classmethod
    def boundary_point(cls, b, scale: float = 1.0, ratios: RatioTuple = (), label: Optional[str] = None) -> "Sensor":
        return cls(SensorKind.BOUNDARY_POINTWISE, SpatialDistribution.dirac(scale), point=tuple(b),
                   ratios=ratios, label=label)

    @classmethod
    def zone(cls, center, half_widths, distribution: Optional[SpatialDistribution] = None,
             ratios: RatioTuple = (), symmetric: Optional[bool] = None, label: Optional[str] = None) -> "Sensor":
        return cls(SensorKind.INTERNAL_ZONE, distribution or SpatialDistribution.uniform(),
                   point=tuple(center), half_widths=(float(half_widths[0]), float(half_widths[1])),
                   ratios=ratios, symmetric=symmetric, label=label)

    @classmethod
    def boundary_zone(cls, segments: Sequence[BoundaryRegion], distribution: Optional[SpatialDistribution] = None,
                      ratios: RatioTuple = (), symmetric: Optional[bool] = None,
                      label: Optional[str] = None) -> "Sensor":
        return cls(SensorKind.BOUNDARY_ZONE, distribution or SpatialDistribution.uniform(),
                   segments=tuple(segments), ratios=ratios, symmetric=symmetric, label=label)

    @classmethod
    def filament(cls, vertices, center=None, distribution: Optional[SpatialDistribution] = None,
                 ratios: RatioTuple = (), symmetric: Optional[bool] = None,
                 label: Optional[str] = None) -> "Sensor":
        verts = tuple((float(x), float(y)) for x, y in vertices)
        if center is None and verts:
            center = (0.5 * (verts[0][0] + verts[-1][0]), 0.5 * (verts[0][1] + verts[-1][1]))
        return cls(SensorKind.FILAMENT, distribution or SpatialDistribution.dirac(),
                   point=center, vertices=verts, ratios=ratios, symmetric=symmetric, label=label)

    @property
    def is_symmetric(self) -> bool:
        """Declared symmetry wins; otherwise inferred from the distribution"""
        if self.symmetric is not None:
            return self.symmetric
        return self.distribution.symmetric

    def scaled(self, alpha: float) -> "Sensor":
        return replace(self, distribution=self.distribution.scaled(alpha))

    def boundary_side(self, domain: RectDomain) -> BoundarySide:
        """Side carrying a boundary pointwise sensor"""
        x, y = self.point
        tx, ty = EDGE_TOL * domain.a1, EDGE_TOL * domain.a2
        hits = {
            BoundarySide.BOTTOM: abs(y) <= ty,
            BoundarySide.RIGHT: abs(x - domain.a1) <= tx,
            BoundarySide.TOP: abs(y - domain.a2) <= ty,
            BoundarySide.LEFT: abs(x) <= tx,
        }
        for side in BOUNDARY_ORDER:
            if hits[side]:
                return side
        raise InvalidSensorGeometry(f"point {self.point} is not on the boundary")

    def validate(self, domain: RectDomain) -> "Sensor":
        """Check the geometry/distribution combination against the domain"""
        dist_kind = self.distribution.kind
        if self.kind.is_pointwise:
            if dist_kind is not DistributionKind.DIRAC:
                raise UnsupportedCombination(f"{self.kind.value} sensors need a dirac distribution")
            if self.point is None:
                raise InvalidSensorGeometry(f"{self.kind.value} sensor needs a point")
            if self.kind is SensorKind.INTERNAL_POINTWISE and not bool(domain.contains(self.point, closed=False)):
                raise InvalidSensorGeometry(f"point {self.point} is outside the open domain")
            if self.kind is SensorKind.BOUNDARY_POINTWISE and not domain.on_boundary(self.point):
                raise InvalidSensorGeometry(f"point {self.point} is not on the boundary")
            return self

        if self.kind is SensorKind.INTERNAL_ZONE:
            if dist_kind is DistributionKind.DIRAC:
                raise UnsupportedCombination("a dirac distribution cannot live on a zone support")
            if self.point is None or self.half_widths is None:
                raise InvalidSensorGeometry("internal zone needs a centre and half widths")
            (c1, c2), (l1, l2) = self.point, self.half_widths
            if not (l1 > 0 and l2 > 0):
                raise InvalidSensorGeometry(f"zone half widths must be positive, got {self.half_widths}")
            corners = [(c1 - l1, c2 - l2), (c1 + l1, c2 + l2)]
            if not bool(np.all(domain.contains(corners))):
                raise InvalidSensorGeometry(f"zone {corners} is not inside the domain")
            return self

        if self.kind is SensorKind.BOUNDARY_ZONE:
            if dist_kind is DistributionKind.DIRAC:
                raise UnsupportedCombination("a dirac distribution cannot live on a zone support")
            if not 1 <= len(self.segments) <= 2:
                raise InvalidSensorGeometry(f"boundary zone needs one or two segments, got {len(self.segments)}")
            for segment in self.segments:
                segment.validate_in(domain)
            return self

        # filament
        if len(self.vertices) < 2:
            raise InvalidSensorGeometry("filament needs at least two vertices")
        if not bool(np.all(domain.contains(self.vertices))):
            raise InvalidSensorGeometry("filament leaves the domain")
        if self.distribution.grid_v is not None:
            raise UnsupportedCombination("filaments take line distributions only")
        return self

    def relocated(self, location, domain: RectDomain, ratios: RatioTuple = ()) -> "Sensor":
        """Same sensor with its anchor moved to `location`.

        Internal kinds take a point; boundary kinds take an arc coordinate on
        their side (boundary zones must have a single segment).
        """
        if self.kind in (SensorKind.INTERNAL_POINTWISE, SensorKind.INTERNAL_ZONE):
            return replace(self, point=(float(location[0]), float(location[1])), ratios=ratios)
        if self.kind is SensorKind.FILAMENT:
            dx, dy = float(location[0]) - self.point[0], float(location[1]) - self.point[1]
            moved = tuple((x + dx, y + dy) for x, y in self.vertices)
            return replace(self, vertices=moved, point=(float(location[0]), float(location[1])), ratios=ratios)
        s = float(np.asarray(location).reshape(-1)[0])
        if self.kind is SensorKind.BOUNDARY_POINTWISE:
            side = self.boundary_side(domain)
            x, y = domain.side_point(side, s)
            return replace(self, point=(float(x), float(y)), ratios=ratios)
        if len(self.segments) != 1:
            raise UnsupportedCombination("only single-segment boundary zones can be relocated")
        segment = self.segments[0]
        half = 0.5 * segment.length
        return replace(self, segments=(BoundaryRegion(segment.side, s - half, s + half),), ratios=ratios)


@dataclass(frozen=True)
class SensorSuite:
    """Ordered sensors; the order is the output-channel order"""
    sensors: Tuple[Sensor, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))

    @property
    def q(self) -> int:
        return len(self.sensors)

    def __len__(self) -> int:
        return self.q

    def __iter__(self):
        return iter(self.sensors)

    def validate(self, domain: RectDomain) -> "SensorSuite":
        for sensor in self.sensors:
            sensor.validate(domain)
        return self

    def with_sensor(self, sensor: Sensor) -> "SensorSuite":
        return SensorSuite(self.sensors + (sensor,))

    def permuted(self, order: Sequence[int]) -> "SensorSuite":
        return SensorSuite(tuple(self.sensors[i] for i in order))


@dataclass(frozen=True, eq=False)
class GMatrix:
    """q x r_n matrix of gradient functionals for one eigenvalue group"""
    eigenvalue: float
    entries: np.ndarray
    singular_values: np.ndarray
    modes: Tuple[Mode, ...] = ()

    @classmethod
    def from_entries(cls, eigenvalue: float, entries: np.ndarray, modes: Tuple[Mode, ...] = ()) -> "GMatrix":
        entries = np.asarray(entries, dtype=float)
        if not np.all(np.isfinite(entries)):
            raise ValueError("G matrix entries must be finite")
        singular_values = np.linalg.svd(entries, compute_uv=False)
        return cls(eigenvalue=eigenvalue, entries=entries, singular_values=singular_values, modes=modes)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape


def support_rule(sensor: Sensor, domain: RectDomain, quad: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature points on the sensor support and weights that include f"""
    sensor.validate(domain)
    dist = sensor.distribution

    if sensor.kind.is_pointwise:
        return np.array([sensor.point], dtype=float), np.array([dist.scale])

    if sensor.kind is SensorKind.INTERNAL_ZONE:
        (c1, c2), (l1, l2) = sensor.point, sensor.half_widths
        check_resolvable(2 * min(l1, l2), domain.scale, "zone")
        points, weights = box_rule(quad.order, (c1 - l1, c1 + l1), (c2 - l2, c2 + l2))
        u = (points[:, 0] - c1) / l1
        v = (points[:, 1] - c2) / l2
        if dist.kind is DistributionKind.TABULATED and dist.grid_v is None:
            raise UnsupportedCombination("an internal zone needs a 2-D tabulated distribution")
        return points, weights * dist.evaluate(u, v)

    if sensor.kind is SensorKind.BOUNDARY_ZONE:
        if dist.kind is DistributionKind.TABULATED and dist.grid_v is not None:
            raise UnsupportedCombination("a boundary zone needs a 1-D tabulated distribution")
        all_points, all_weights = [], []
        for segment in sensor.segments:
            check_resolvable(segment.length, domain.scale, "boundary segment")
            s, w = interval_rule(quad.line_order, segment.lo, segment.hi)
            u = (s - segment.center) / (0.5 * segment.length)
            all_points.append(segment.point_at(domain, s))
            all_weights.append(w * dist.evaluate(u))
        return np.vstack(all_points), np.concatenate(all_weights)

    points, weights, arc = polyline_rule(sensor.vertices, quad.line_order)
    total = float(np.sum(weights))
    check_resolvable(total, domain.scale, "filament")
    u = 2.0 * arc / total - 1.0
    return points, weights * dist.evaluate(u)


def sensor_mode_entry(sensor: Sensor, mode: Mode, domain: RectDomain, quad: QuadratureSpec) -> float:
    """(G_n)_ij for one sensor and one mode: sum_k <d phi/d x_k, f> over the support"""
    points, weights = support_rule(sensor, domain, quad)
    grad = eval_eigengradient(mode, domain, points)
    return float(weights @ (grad[:, 0] + grad[:, 1]))


def sensor_mode_value(sensor: Sensor, mode: Mode, domain: RectDomain, quad: QuadratureSpec) -> float:
    """Value functional <phi, f> over the support (point evaluation for pointwise kinds)"""
    points, weights = support_rule(sensor, domain, quad)
    return float(weights @ eval_eigenfunction(mode, domain, points))


def gradient_matrix(suite: SensorSuite, modeset: ModeSet, quad: QuadratureSpec) -> np.ndarray:
    """(q, N) gradient functionals for every sensor and mode of the set"""
    rows = []
    for sensor in suite:
        points, weights = support_rule(sensor, modeset.domain, quad)
        grad = eigengradient_matrix(modeset, points)
        rows.append(weights @ (grad[:, :, 0] + grad[:, :, 1]))
    return np.array(rows).reshape(suite.q, modeset.size)


def output_matrix(suite: SensorSuite, modeset: ModeSet, quad: QuadratureSpec) -> np.ndarray:
    """(q, N) output operator C in spectral coordinates"""
    rows = []
    for sensor in suite:
        points, weights = support_rule(sensor, modeset.domain, quad)
        rows.append(weights @ eigenfunction_matrix(modeset, points))
    return np.array(rows).reshape(suite.q, modeset.size)


def assemble_G(suite: SensorSuite, group: EigenGroup, domain: RectDomain, quad: QuadratureSpec) -> GMatrix:
    """G_n for one eigenvalue group; columns follow the group's mode order"""
    if suite.q == 0:
        raise EmptySuite("the sensor suite is empty")
    entries = np.array([
        [sensor_mode_entry(sensor, mode, domain, quad) for mode in group.modes]
        for sensor in suite
    ])
    return GMatrix.from_entries(group.eigenvalue, entries, group.modes)


def apply_output(suite: SensorSuite, coeffs: StateCoeffs, modeset: ModeSet, t: float,
                 quad: QuadratureSpec) -> np.ndarray:
    """y(t) = C S(t) x0 for a spectral state; length-q vector"""
    if coeffs.modeset != modeset:
        raise ModeSetMismatch("coefficients were built on a different mode set")
    if t < 0:
        raise ValueError(f"output time must be >= 0, got {t}")
    C = output_matrix(suite, modeset, quad)
    return C @ (np.exp(modeset.eigenvalues * t) * coeffs.values)
