"""
Turns a validated RunConfig into the objects the numerical modules work on
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math
import re

import numpy as np
from pydantic import ValidationError

from .errors import (
    ConfigValidationError,
    DomainError,
    InvalidRegion,
    InvalidSensorGeometry,
    UnsupportedCombination,
)
from .quadrature import QuadratureSpec
from .schemas import DistributionConfig, RunConfig, SensorConfig
from .sensing import Sensor, SensorKind, SensorSuite, SpatialDistribution
from .simulate_reconstruct import (
    OutputRecord,
    StateCoeffs,
    bump_field,
    default_regularization,
    gaussian_field,
    project_initial_state,
)
from .spectral_core import BoundaryRegion, ModeSet, RectDomain, build_mode_set, is_simple_spectrum

logger = logging.getLogger(__name__)

_SQRT = re.compile(r"^sqrt\(\s*([0-9.eE+-]+)\s*\)$")


def format_location(loc: Sequence[Union[str, int]]) -> str:
    """('sensors', 0, 'point') -> 'sensors[0].point'"""
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path


def config_error_from_validation(error: ValidationError) -> ConfigValidationError:
    first = error.errors()[0]
    path = format_location(first.get("loc", ()))
    return ConfigValidationError(f"{path}: {first.get('msg', 'invalid value')}", field_path=path)


def parse_length(value: Union[float, str], path: str) -> float:
    """Side length from a number, 'p/q', a decimal string or 'sqrt(k)'"""
    try:
        if isinstance(value, str):
            text = value.strip()
            match = _SQRT.match(text)
            length = math.sqrt(float(match.group(1))) if match else float(Fraction(text))
        else:
            length = float(value)
    except (ValueError, ZeroDivisionError) as error:
        raise ConfigValidationError(f"{path}: cannot read side length {value!r} ({error})", field_path=path)
    if not (math.isfinite(length) and length > 0):
        raise ConfigValidationError(f"{path}: side length must be positive, got {value!r}", field_path=path)
    return length


def parse_coordinate(value: Union[float, str], length: float, path: str) -> Tuple[float, Optional[Fraction]]:
    """(absolute value, exact ratio or None); strings are ratios of `length`"""
    if isinstance(value, str):
        try:
            ratio = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigValidationError(f"{path}: cannot read ratio {value!r}", field_path=path)
        return float(ratio) * length, ratio
    if not math.isfinite(value):
        raise ConfigValidationError(f"{path}: coordinate must be finite", field_path=path)
    return float(value), None


def _parse_point(values, domain: RectDomain, path: str):
    x, rx = parse_coordinate(values[0], domain.a1, f"{path}[0]")
    y, ry = parse_coordinate(values[1], domain.a2, f"{path}[1]")
    return (x, y), (rx, ry)


def build_distribution(cfg: Optional[DistributionConfig], kind: SensorKind, path: str) -> SpatialDistribution:
    if cfg is None:
        if kind.is_pointwise or kind is SensorKind.FILAMENT:
            return SpatialDistribution.dirac()
        return SpatialDistribution.uniform()
    try:
        if cfg.kind.value == "tabulated":
            return SpatialDistribution.tabulated(cfg.grid_u or [], cfg.samples or [], cfg.grid_v, cfg.scale)
        if cfg.kind.value == "analytic":
            return SpatialDistribution.analytic(cfg.expression, cfg.scale, **cfg.params)
        return SpatialDistribution(cfg.kind, scale=cfg.scale)
    except (ValueError, TypeError) as error:
        raise ConfigValidationError(f"{path}: {error}", field_path=path)


def _require(value, path: str, what: str):
    if value is None:
        raise ConfigValidationError(f"{path}: {what} is required for this sensor kind", field_path=path)
    return value


def build_sensor(cfg: SensorConfig, domain: RectDomain, index: int) -> Sensor:
    path = f"sensors[{index}]"
    kind = cfg.kind
    distribution = build_distribution(cfg.distribution, kind, f"{path}.distribution")
    common = dict(distribution=distribution, symmetric=cfg.symmetric, label=cfg.label or f"sensor_{index}")
    geometry_field = "point"
    try:
        if kind.is_pointwise or kind is SensorKind.INTERNAL_ZONE:
            point, ratios = _parse_point(_require(cfg.point, f"{path}.point", "point"), domain, f"{path}.point")
            if kind is SensorKind.INTERNAL_ZONE:
                geometry_field = "half_widths"
                half_widths = _require(cfg.half_widths, f"{path}.half_widths", "half_widths")
                sensor = Sensor(kind, point=point, half_widths=tuple(half_widths), ratios=ratios, **common)
            else:
                sensor = Sensor(kind, point=point, ratios=ratios, **common)
        elif kind is SensorKind.BOUNDARY_ZONE:
            geometry_field = "segments"
            segments, ratios = [], []
            for k, seg in enumerate(_require(cfg.segments, f"{path}.segments", "segments")):
                seg_path = f"{path}.segments[{k}]"
                length = domain.side_length(seg.side)
                lo, rlo = parse_coordinate(seg.lo, length, f"{seg_path}.lo")
                hi, rhi = parse_coordinate(seg.hi, length, f"{seg_path}.hi")
                segments.append(BoundaryRegion(seg.side, lo, hi))
                ratios.append(None if rlo is None or rhi is None else (rlo + rhi) / 2)
            sensor = Sensor(kind, segments=tuple(segments), ratios=tuple(ratios), **common)
        else:
            geometry_field = "vertices"
            vertices, vertex_ratios = [], []
            for k, vertex in enumerate(_require(cfg.vertices, f"{path}.vertices", "vertices")):
                point, ratio = _parse_point(vertex, domain, f"{path}.vertices[{k}]")
                vertices.append(point)
                vertex_ratios.append(ratio)
            if cfg.point is not None:
                center, ratios = _parse_point(cfg.point, domain, f"{path}.point")
            else:
                center = None
                first, last = vertex_ratios[0], vertex_ratios[-1]
                ratios = tuple(
                    None if a is None or b is None else (a + b) / 2 for a, b in zip(first, last)
                )
            sensor = Sensor.filament(vertices, center=center, ratios=ratios, **common)
        return sensor.validate(domain)
    except UnsupportedCombination as error:
        raise ConfigValidationError(f"{path}.distribution: {error}", field_path=f"{path}.distribution")
    except (InvalidSensorGeometry, DomainError) as error:
        field = f"{path}.{geometry_field}"
        raise ConfigValidationError(f"{field}: {error}", field_path=field)


@dataclass(frozen=True)
class Problem:
    """Everything a command needs, derived from one RunConfig"""
    config: RunConfig
    domain: RectDomain
    gamma: BoundaryRegion
    modeset: ModeSet
    suite: SensorSuite
    quad: QuadratureSpec

    @property
    def J(self) -> int:
        return self.modeset.J

    @property
    def rank_tol(self) -> float:
        return self.config.tolerances.rank_tol

    @property
    def pd_tol(self) -> float:
        return self.config.tolerances.pd_tol

    @property
    def simple_spectrum(self) -> bool:
        return is_simple_spectrum(self.modeset)


def build_problem(config: RunConfig) -> Problem:
    """Check every geometric invariant and build the core objects"""
    domain = RectDomain(parse_length(config.domain.a1, "domain.a1"), parse_length(config.domain.a2, "domain.a2"))

    side_length = domain.side_length(config.gamma.side)
    lo, _ = parse_coordinate(config.gamma.lo, side_length, "gamma.lo")
    hi, _ = parse_coordinate(config.gamma.hi, side_length, "gamma.hi")
    try:
        gamma = BoundaryRegion(config.gamma.side, lo, hi).validate_in(domain)
    except InvalidRegion as error:
        raise ConfigValidationError(f"gamma: {error}", field_path="gamma")

    J = config.modes.J
    modeset = build_mode_set(domain, J, config.modes.grouping_tol)
    default_quad = QuadratureSpec.for_modes(J)
    quad = QuadratureSpec(
        order=config.quadrature.order or default_quad.order,
        line_order=config.quadrature.line_order or default_quad.line_order,
    )
    suite = SensorSuite(tuple(build_sensor(cfg, domain, k) for k, cfg in enumerate(config.sensors)))
    if config.scan is not None and config.scan.sensor >= suite.q:
        raise ConfigValidationError(
            f"scan.sensor: index {config.scan.sensor} but only {suite.q} sensor(s)", field_path="scan.sensor"
        )
    if suite.q < modeset.max_multiplicity:
        logger.warning(f"{suite.q} sensor(s) configured but the largest eigenvalue multiplicity is "
                       f"{modeset.max_multiplicity}; the suite cannot be strategic")
    return Problem(config=config, domain=domain, gamma=gamma, modeset=modeset, suite=suite, quad=quad)


def initial_coefficients(problem: Problem) -> StateCoeffs:
    state = problem.config.initial_state
    modeset, domain = problem.modeset, problem.domain
    if state.kind == "modes":
        entries = {}
        for k, coefficient in enumerate(state.coefficients):
            if coefficient.n > modeset.J or coefficient.m > modeset.J:
                path = f"initial_state.coefficients[{k}]"
                raise ConfigValidationError(
                    f"{path}: mode ({coefficient.n}, {coefficient.m}) exceeds J={modeset.J}", field_path=path
                )
            entries[(coefficient.n, coefficient.m)] = coefficient.value
        return StateCoeffs.from_modes(modeset, entries)
    if state.kind == "bump":
        return project_initial_state(bump_field(domain), modeset, problem.quad)
    if state.center is None:
        center = (0.5 * domain.a1, 0.5 * domain.a2)
    else:
        center, _ = _parse_point(state.center, domain, "initial_state.center")
    return project_initial_state(gaussian_field(center, state.width), modeset, problem.quad)


def effective_regularization(problem: Problem, record: OutputRecord) -> float:
    configured = problem.config.regularization.lambda_
    if configured is not None:
        return configured
    return default_regularization(problem.config.noise.sigma, record)


def scan_grid(problem: Problem) -> Tuple[Sensor, SensorSuite, List]:
    """(template, fixed sensors, locations) for the configured scan.

    Internal kinds get points on an nx x ny grid (y outer, x inner); boundary
    kinds get nx arc coordinates on the template's side.  An axis with a
    single sample keeps the template's own coordinate.
    """
    scan = problem.config.scan
    if scan is None:
        raise ConfigValidationError("scan: a scan grid is required for this command", field_path="scan")
    template = problem.suite.sensors[scan.sensor]
    fixed = SensorSuite(tuple(s for k, s in enumerate(problem.suite.sensors) if k != scan.sensor))
    domain = problem.domain

    def axis(count, bounds, length, anchor):
        if count == 1:
            return np.array([anchor])
        return np.linspace(bounds[0], bounds[1], count) * length

    if template.kind.is_boundary:
        if template.kind is SensorKind.BOUNDARY_POINTWISE:
            side = template.boundary_side(domain)
            anchor = template.point[0] if side.is_horizontal else template.point[1]
        else:
            if len(template.segments) != 1:
                raise ConfigValidationError("scan.sensor: only single-segment boundary zones can be scanned",
                                            field_path="scan.sensor")
            side, anchor = template.segments[0].side, template.segments[0].center
        locations = list(axis(scan.nx, scan.x_range, domain.side_length(side), anchor))
        return template, fixed, locations

    xs = axis(scan.nx, scan.x_range, domain.a1, template.point[0])
    ys = axis(scan.ny, scan.y_range, domain.a2, template.point[1])
    return template, fixed, [(x, y) for y in ys for x in xs]
