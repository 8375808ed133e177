"""
Forward simulation in the eigenbasis and reconstruction of the initial
gradient trace on a boundary region.

The semigroup is diagonal in the eigenbasis, so a state at time t is
exp(lambda t) * c.  Reconstruction inverts the sampled output map in
spectral coordinates (Tikhonov-regularized least squares) and then maps the
estimated coefficients to the gradient trace.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy.integrate import simpson

from .errors import (
    ChannelMismatch,
    HorizonMismatch,
    ModeSetMismatch,
    NonPositiveHorizon,
    QuadratureUnderResolved,
    SingularSystem,
)
from .quadrature import QuadratureSpec, box_rule, interval_rule
from .sensing import SensorSuite, output_matrix
from .spectral_core import (
    BOUNDARY_ORDER,
    BoundaryRegion,
    ModeSet,
    RectDomain,
    StateCoeffs,
    eigenfunction_matrix,
    eigengradient_matrix,
    full_boundary,
    split_components,
)
from .strategic_analysis import state_rank_test

logger = logging.getLogger(__name__)

__all__ = [
    "StateCoeffs", "TabulatedField", "OutputRecord", "GradientTrace", "ErrorNorms", "ReconstructionResult",
    "project_initial_state", "simulate_outputs", "add_noise", "state_at", "gradient_trace",
    "reconstruct_gradient", "error_norms", "default_regularization",
    "bump_field", "gaussian_field",
]

Regions = Union[BoundaryRegion, Sequence[BoundaryRegion]]


def _as_regions(gamma: Regions) -> Tuple[BoundaryRegion, ...]:
    return (gamma,) if isinstance(gamma, BoundaryRegion) else tuple(gamma)


def _require_same_modeset(coeffs: StateCoeffs, modeset: ModeSet) -> None:
    if coeffs.modeset != modeset:
        raise ModeSetMismatch("coefficients were built on a different mode set")


# Initial states

@dataclass(frozen=True, eq=False)
class TabulatedField:
    """Samples of x0 on a tensor grid: values[i, j] = x0(xs[i], ys[j])"""
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xs, ys = np.asarray(self.xs, dtype=float), np.asarray(self.ys, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (xs.size, ys.size):
            raise ValueError(f"field values have shape {values.shape}, expected {(xs.size, ys.size)}")
        for name, grid in (("xs", xs), ("ys", ys)):
            if grid.size < 3 or np.any(np.diff(grid) <= 0):
                raise ValueError(f"{name} must be strictly increasing with at least 3 samples")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "values", values)


def bump_field(domain: RectDomain) -> Callable:
    """x1 (a1 - x1) x2 (a2 - x2)"""
    def field(x, y):
        return x * (domain.a1 - x) * y * (domain.a2 - y)
    return field


def gaussian_field(center: Tuple[float, float], width: float) -> Callable:
    if not width > 0:
        raise ValueError(f"gaussian width must be positive, got {width}")

    def field(x, y):
        return np.exp(-((x - center[0]) ** 2 + (y - center[1]) ** 2) / (2.0 * width ** 2))
    return field


def project_initial_state(field: Union[Callable, TabulatedField], modeset: ModeSet,
                          quad: QuadratureSpec) -> StateCoeffs:
    """c_nm = integral over Omega of x0 phi_nm.

    Callables are integrated with a tensor Gauss-Legendre rule; tabulated
    fields with Simpson's rule on their own grid, which must carry at least
    two samples per half-wave of the highest mode.
    """
    domain = modeset.domain
    if isinstance(field, TabulatedField):
        for name, grid, length in (("x", field.xs, domain.a1), ("y", field.ys, domain.a2)):
            spacing = float(np.max(np.diff(grid)))
            if spacing > 0.5 * length / modeset.J:
                raise QuadratureUnderResolved(
                    f"tabulated grid spacing {spacing:.4g} along {name} gives fewer than two "
                    f"samples per half-wave of mode J={modeset.J}"
                )
        xx, yy = np.meshgrid(field.xs, field.ys, indexing="ij")
        points = np.column_stack([xx.ravel(), yy.ravel()])
        phi = eigenfunction_matrix(modeset, points).reshape(field.xs.size, field.ys.size, modeset.size)
        integrand = field.values[:, :, None] * phi
        inner = simpson(integrand, x=field.ys, axis=1)
        return StateCoeffs(modeset, simpson(inner, x=field.xs, axis=0))

    order = max(quad.order, 4 * modeset.J + 8)
    points, weights = box_rule(order, (0.0, domain.a1), (0.0, domain.a2))
    values = np.asarray(field(points[:, 0], points[:, 1]), dtype=float)
    return StateCoeffs(modeset, (weights * values) @ eigenfunction_matrix(modeset, points))


def state_at(coeffs: StateCoeffs, modeset: ModeSet, t: float) -> StateCoeffs:
    """Semigroup action on spectral coordinates"""
    _require_same_modeset(coeffs, modeset)
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    return StateCoeffs(modeset, np.exp(modeset.eigenvalues * t) * coeffs.values)


# Outputs

@dataclass(frozen=True, eq=False)
class OutputRecord:
    """Sampled outputs y_i(t_k); samples has shape (K+1, q)"""
    times: np.ndarray
    samples: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        if times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("output times must be strictly increasing with at least two samples")
        if samples.shape[0] != times.size:
            raise ChannelMismatch(f"{samples.shape[0]} sample rows for {times.size} times")
        if self.noise_sigma < 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.noise_sigma}")
        times.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "samples", samples)

    @property
    def q(self) -> int:
        return self.samples.shape[1]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def sample_count(self) -> int:
        return int(self.samples.size)


def sample_times(T: float, dt: Optional[float] = None) -> np.ndarray:
    """Uniform grid 0 = t_0 < ... < t_K = T; dt defaults to T/100"""
    if not (math.isfinite(T) and T > 0):
        raise NonPositiveHorizon(f"time horizon must be positive, got {T}", field_path="time.T")
    dt = T / 100.0 if dt is None else dt
    if not (dt > 0 and dt <= T):
        raise NonPositiveHorizon(f"time step must satisfy 0 < dt <= T, got dt={dt}", field_path="time.dt")
    steps = max(1, int(round(T / dt)))
    if abs(steps * dt - T) > 1e-9 * T:
        logger.warning(f"dt={dt:g} does not divide T={T:g}; using {steps} uniform steps")
    return np.linspace(0.0, T, steps + 1)


def observation_matrix(C: np.ndarray, modeset: ModeSet, times: np.ndarray) -> np.ndarray:
    """Rows (t_k, sensor i), columns modes: C[i, a] exp(lambda_a t_k)"""
    decay = np.exp(np.outer(times, modeset.eigenvalues))
    return (decay[:, None, :] * C[None, :, :]).reshape(times.size * C.shape[0], modeset.size)


def simulate_outputs(suite: SensorSuite, coeffs: StateCoeffs, modeset: ModeSet, T: float,
                     dt: Optional[float], quad: QuadratureSpec) -> OutputRecord:
    _require_same_modeset(coeffs, modeset)
    times = sample_times(T, dt)
    C = output_matrix(suite, modeset, quad)
    decay = np.exp(np.outer(times, modeset.eigenvalues))
    samples = (decay * coeffs.values) @ C.T
    logger.info(f"Simulated {suite.q} output channel(s) at {times.size} times up to T={T:g}")
    return OutputRecord(times=times, samples=samples.reshape(times.size, suite.q), noise_sigma=0.0)


def add_noise(record: OutputRecord, sigma: float, seed: Optional[int] = None) -> OutputRecord:
    """Independent N(0, sigma^2) perturbation of every sample, reproducible under `seed`"""
    if sigma < 0:
        raise ValueError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return OutputRecord(record.times, record.samples, record.noise_sigma)
    rng = np.random.default_rng(seed)
    noisy = record.samples + sigma * rng.standard_normal(record.samples.shape)
    return OutputRecord(record.times, noisy, noise_sigma=sigma)


def default_regularization(sigma: float, record: OutputRecord) -> float:
    """sigma^2 times the number of scalar samples; 0 for clean data"""
    return float(sigma) ** 2 * record.sample_count


# Gradient traces

@dataclass(frozen=True, eq=False)
class GradientTrace:
    """Cartesian gradient samples along one or more boundary regions"""
    regions: Tuple[BoundaryRegion, ...]
    region_index: np.ndarray
    s: np.ndarray
    values: np.ndarray

    @property
    def points(self) -> int:
        return self.s.size

    def components(self) -> Tuple[np.ndarray, np.ndarray]:
        """(tangential, outward normal) components per sample"""
        tangential = np.empty(self.s.size)
        normal = np.empty(self.s.size)
        for k, region in enumerate(self.regions):
            mask = self.region_index == k
            tangential[mask], normal[mask] = split_components(region.side, self.values[mask])
        return tangential, normal

    def sides(self) -> List[str]:
        return [self.regions[k].side.value for k in self.region_index]


def gradient_trace(coeffs: StateCoeffs, modeset: ModeSet, gamma: Regions, samples: int = 101) -> GradientTrace:
    """sum_a c_a grad phi_a on uniformly spaced arc coordinates of each region"""
    _require_same_modeset(coeffs, modeset)
    if samples < 2:
        raise ValueError(f"trace samples must be >= 2, got {samples}")
    regions = _as_regions(gamma)
    s_parts, values, index = [], [], []
    for k, region in enumerate(regions):
        region.validate_in(modeset.domain)
        s = np.linspace(region.lo, region.hi, samples)
        grads = eigengradient_matrix(modeset, region.point_at(modeset.domain, s))
        s_parts.append(s)
        values.append(np.einsum("pnk,n->pk", grads, coeffs.values))
        index.append(np.full(samples, k))
    return GradientTrace(
        regions=regions,
        region_index=np.concatenate(index),
        s=np.concatenate(s_parts),
        values=np.vstack(values),
    )


# Error norms

@dataclass(frozen=True)
class ErrorNorms:
    """Line-integral norms of the gradient-trace error on gamma and on the whole boundary"""
    err_gamma: float
    err_boundary: float
    weight_exponent: float = 0.0


def _merged_intervals(regions: Sequence[BoundaryRegion], side) -> List[Tuple[float, float]]:
    spans = sorted((region.lo, region.hi) for region in regions if region.side is side)
    merged: List[Tuple[float, float]] = []
    for lo, hi in spans:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def _complement(intervals: List[Tuple[float, float]], length: float) -> List[Tuple[float, float]]:
    gaps, start = [], 0.0
    for lo, hi in intervals:
        if lo > start:
            gaps.append((start, lo))
        start = max(start, hi)
    if start < length:
        gaps.append((start, length))
    return gaps


def _squared_norm(error: np.ndarray, modeset: ModeSet, side, intervals, order: int) -> float:
    total = 0.0
    for lo, hi in intervals:
        s, w = interval_rule(order, lo, hi)
        grads = eigengradient_matrix(modeset, modeset.domain.side_point(side, s))
        trace = np.einsum("pnk,n->pk", grads, error)
        total += float(w @ np.sum(trace ** 2, axis=1))
    return total


def error_norms(true_coeffs: StateCoeffs, estimate, modeset: ModeSet, gamma: Regions,
                weight_exponent: float = 0.0, line_order: int = 0) -> ErrorNorms:
    """Surrogate trace norm of e = x0 - x0_estimate on gamma and on the boundary.

    ||e|| = (integral of |grad e|^2 ds)^(1/2), with coefficients optionally
    weighted by (1 + |lambda|)^(weight_exponent/2).  The boundary norm is
    assembled as the gamma part plus the complement on every side, so
    err_gamma <= err_boundary holds exactly.
    """
    estimated = estimate.estimated_coeffs if isinstance(estimate, ReconstructionResult) else estimate
    _require_same_modeset(true_coeffs, modeset)
    _require_same_modeset(estimated, modeset)
    error = true_coeffs.values - estimated.values
    if weight_exponent:
        error = error * (1.0 + np.abs(modeset.eigenvalues)) ** (0.5 * weight_exponent)

    regions = _as_regions(gamma)
    for region in regions:
        region.validate_in(modeset.domain)
    order = max(line_order, 4 * modeset.J + 8)
    gamma_sq, rest_sq = 0.0, 0.0
    for side in BOUNDARY_ORDER:
        covered = _merged_intervals(regions, side)
        gamma_sq += _squared_norm(error, modeset, side, covered, order)
        gaps = _complement(covered, modeset.domain.side_length(side))
        rest_sq += _squared_norm(error, modeset, side, gaps, order)
    return ErrorNorms(
        err_gamma=math.sqrt(gamma_sq),
        err_boundary=math.sqrt(gamma_sq + rest_sq),
        weight_exponent=weight_exponent,
    )


# Reconstruction

@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    estimated_coeffs: StateCoeffs
    trace_on_gamma: GradientTrace
    trace_on_boundary: GradientTrace
    regularization: float
    residual: float
    err_gamma: Optional[float] = None
    err_boundary: Optional[float] = None
    condition_number: float = math.nan

    def __post_init__(self):
        if self.err_gamma is not None and self.err_boundary is not None:
            if self.err_gamma > self.err_boundary + 1e-12:
                raise ValueError("restriction inequality violated: err_gamma > err_boundary")


def reconstruct_gradient(record: OutputRecord, suite: SensorSuite, modeset: ModeSet, gamma: Regions,
                         reg_lambda: float, quad: QuadratureSpec, T: Optional[float] = None,
                         true_coeffs: Optional[StateCoeffs] = None, trace_samples: int = 101,
                         rank_tol: float = 1e-10, singular_rcond: float = 1e-12,
                         weight_exponent: float = 0.0) -> ReconstructionResult:
    """Minimize sum_k |y(t_k) - y_hat(t_k; c)|^2 + reg_lambda |c|^2 and trace the estimate.

    Solved as the stacked least-squares system [A; sqrt(reg) I] c = [y; 0]
    with column equilibration, which has the normal equations as its optimality
    condition.  Without regularization an unobservable group, or a column-scaled
    system below `singular_rcond`, raises SingularSystem.
    """
    if reg_lambda < 0 or not math.isfinite(reg_lambda):
        raise ValueError(f"regularization must be finite and >= 0, got {reg_lambda}")
    if record.q != suite.q:
        raise ChannelMismatch(f"record has {record.q} channel(s), suite has {suite.q} sensor(s)")
    if T is not None and (abs(record.T - T) > 1e-9 * T or record.times[0] != 0.0):
        raise HorizonMismatch(f"record spans [{record.times[0]:g}, {record.T:g}], expected [0, {T:g}]")
    if true_coeffs is not None:
        _require_same_modeset(true_coeffs, modeset)

    C = output_matrix(suite, modeset, quad)
    A = observation_matrix(C, modeset, record.times)
    b = record.samples.reshape(-1)

    scale = np.linalg.norm(A, axis=0)
    blind = scale <= singular_rcond * max(float(scale.max()), np.finfo(float).tiny)
    if reg_lambda == 0:
        if not state_rank_test(suite, modeset, quad, rank_tol).strategic or np.any(blind):
            raise SingularSystem("the sampled output map is singular: some modes are unobservable "
                                 "(use a strategic suite or a positive regularization)")
    scale = np.where(blind, 1.0, scale)
    scaled = A / scale
    singular_values = np.linalg.svd(scaled, compute_uv=False)
    condition = float(singular_values[0] / singular_values[-1]) if singular_values[-1] > 0 else math.inf
    if reg_lambda == 0 and singular_values[-1] <= singular_rcond * singular_values[0]:
        raise SingularSystem(f"output map is numerically singular (condition {condition:.3e})")
    logger.debug(f"Observation system {A.shape[0]}x{A.shape[1]}, scaled condition {condition:.3e}")

    if reg_lambda > 0:
        system = np.vstack([scaled, math.sqrt(reg_lambda) * np.diag(1.0 / scale)])
        rhs = np.concatenate([b, np.zeros(modeset.size)])
    else:
        system, rhs = scaled, b
    z, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    estimate = StateCoeffs(modeset, z / scale)
    residual = float(np.linalg.norm(A @ estimate.values - b))

    norms = None
    if true_coeffs is not None:
        norms = error_norms(true_coeffs, estimate, modeset, gamma, weight_exponent=weight_exponent,
                            line_order=quad.line_order)
    result = ReconstructionResult(
        estimated_coeffs=estimate,
        trace_on_gamma=gradient_trace(estimate, modeset, gamma, trace_samples),
        trace_on_boundary=gradient_trace(estimate, modeset, full_boundary(modeset.domain), trace_samples),
        regularization=reg_lambda,
        residual=residual,
        err_gamma=None if norms is None else norms.err_gamma,
        err_boundary=None if norms is None else norms.err_boundary,
        condition_number=condition,
    )
    logger.info(f"Reconstructed {modeset.size} coefficients (lambda={reg_lambda:g}, residual={residual:.3e})")
    return result
