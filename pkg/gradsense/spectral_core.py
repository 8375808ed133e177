"""
Truncated Dirichlet-Laplacian eigen-decomposition on a rectangle.

Modes are phi_nm(x, y) = 2/sqrt(a1 a2) sin(n pi x/a1) sin(m pi y/a2) with
eigenvalue -(n^2/a1^2 + m^2/a2^2) pi^2.  Everything here is a pure function
of immutable inputs.
"""
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, List, Tuple, Union
import logging
import math

import numpy as np

from .errors import InvalidRegion, NonPositiveDomain, OutOfDomain, OutOfRegion

logger = logging.getLogger(__name__)

# Relative slack for points and arc coordinates that sit on an edge
EDGE_TOL = 1e-12

PointLike = Union[Tuple[float, float], np.ndarray]


class BoundarySide(str, Enum):
    """Sides of the rectangle; the arc coordinate runs along x or y from the origin corner"""
    BOTTOM = "bottom"
    TOP = "top"
    LEFT = "left"
    RIGHT = "right"

    @property
    def is_horizontal(self) -> bool:
        return self in (BoundarySide.BOTTOM, BoundarySide.TOP)


# Order used whenever the whole boundary is walked
BOUNDARY_ORDER = (BoundarySide.BOTTOM, BoundarySide.RIGHT, BoundarySide.TOP, BoundarySide.LEFT)


@dataclass(frozen=True)
class RectDomain:
    """Omega = ]0, a1[ x ]0, a2["""
    a1: float
    a2: float

    def __post_init__(self):
        for name in ("a1", "a2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise NonPositiveDomain(f"side length {name} must be positive, got {value}", field_path=name)

    @property
    def scale(self) -> float:
        return max(self.a1, self.a2)

    @property
    def area(self) -> float:
        return self.a1 * self.a2

    @property
    def corners(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [self.a1, 0.0], [self.a1, self.a2], [0.0, self.a2]])

    def side_length(self, side: BoundarySide) -> float:
        return self.a1 if BoundarySide(side).is_horizontal else self.a2

    def side_point(self, side: BoundarySide, s) -> np.ndarray:
        """Boundary point(s) at arc coordinate s on a side"""
        s = np.asarray(s, dtype=float)
        side = BoundarySide(side)
        if side is BoundarySide.BOTTOM:
            return np.stack([s, np.zeros_like(s)], axis=-1)
        if side is BoundarySide.TOP:
            return np.stack([s, np.full_like(s, self.a2)], axis=-1)
        if side is BoundarySide.LEFT:
            return np.stack([np.zeros_like(s), s], axis=-1)
        return np.stack([np.full_like(s, self.a1), s], axis=-1)

    def contains(self, points, closed: bool = True) -> np.ndarray:
        """Membership in the closure (closed=True) or in the open rectangle"""
        p = np.asarray(points, dtype=float)
        x, y = p[..., 0], p[..., 1]
        if closed:
            tx, ty = EDGE_TOL * self.a1, EDGE_TOL * self.a2
            return (x >= -tx) & (x <= self.a1 + tx) & (y >= -ty) & (y <= self.a2 + ty)
        return (x > 0) & (x < self.a1) & (y > 0) & (y < self.a2)

    def on_boundary(self, point: PointLike) -> bool:
        x, y = float(point[0]), float(point[1])
        if not bool(self.contains((x, y))):
            return False
        tx, ty = EDGE_TOL * self.a1, EDGE_TOL * self.a2
        return abs(x) <= tx or abs(x - self.a1) <= tx or abs(y) <= ty or abs(y - self.a2) <= ty

    def require_closure(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if not np.all(self.contains(p)):
            raise OutOfDomain(f"point(s) outside [0, {self.a1}] x [0, {self.a2}]: {p.tolist()}")
        return p


@dataclass(frozen=True)
class BoundaryRegion:
    """Arc interval [lo, hi] along one side of the rectangle"""
    side: BoundarySide
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "side", BoundarySide(self.side))
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidRegion(f"region bounds must be finite, got [{self.lo}, {self.hi}]")
        if self.lo < 0 or not self.lo < self.hi:
            raise InvalidRegion(f"region needs 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def full_side(cls, domain: RectDomain, side: BoundarySide) -> "BoundaryRegion":
        return cls(BoundarySide(side), 0.0, domain.side_length(side))

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def validate_in(self, domain: RectDomain) -> "BoundaryRegion":
        length = domain.side_length(self.side)
        if self.hi > length * (1 + EDGE_TOL):
            raise InvalidRegion(f"region [{self.lo}, {self.hi}] exceeds {self.side.value} side length {length}")
        return self

    def contains_arc(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        slack = EDGE_TOL * max(self.hi, 1.0)
        return (s >= self.lo - slack) & (s <= self.hi + slack)

    def point_at(self, domain: RectDomain, s) -> np.ndarray:
        return domain.side_point(self.side, s)

    def describe(self) -> str:
        return f"{self.side.value}[{self.lo:.6g}, {self.hi:.6g}]"


def full_boundary(domain: RectDomain) -> Tuple[BoundaryRegion, ...]:
    """The four sides, in BOUNDARY_ORDER"""
    return tuple(BoundaryRegion.full_side(domain, side) for side in BOUNDARY_ORDER)


def split_components(side: BoundarySide, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(tangential, outward normal) components of cartesian gradients on a side"""
    grad = np.asarray(grad, dtype=float)
    gx, gy = grad[..., 0], grad[..., 1]
    side = BoundarySide(side)
    if side is BoundarySide.BOTTOM:
        return gx, -gy
    if side is BoundarySide.TOP:
        return gx, gy
    if side is BoundarySide.LEFT:
        return gy, -gx
    return gy, gx


@dataclass(frozen=True, order=True)
class ModeIndex:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"mode indices must be positive, got ({self.n}, {self.m})")

    def as_tuple(self) -> Tuple[int, int]:
        return (self.n, self.m)


@dataclass(frozen=True)
class Mode:
    index: ModeIndex
    eigenvalue: float

    @property
    def n(self) -> int:
        return self.index.n

    @property
    def m(self) -> int:
        return self.index.m


@dataclass(frozen=True)
class EigenGroup:
    """Modes sharing one eigenvalue (within the grouping tolerance)"""
    eigenvalue: float
    modes: Tuple[Mode, ...]

    @property
    def multiplicity(self) -> int:
        return len(self.modes)


@dataclass(frozen=True)
class ModeSet:
    """All J^2 modes of a truncation, grouped by eigenvalue (decreasing)"""
    domain: RectDomain
    J: int
    groups: Tuple[EigenGroup, ...]
    grouping_tol: float

    @cached_property
    def modes(self) -> Tuple[Mode, ...]:
        """Flat mode order used by every coefficient vector: group order, then (n, m)"""
        return tuple(mode for group in self.groups for mode in group.modes)

    @property
    def size(self) -> int:
        return len(self.modes)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        values = np.array([mode.eigenvalue for mode in self.modes])
        values.setflags(write=False)
        return values

    @cached_property
    def wave_numbers(self) -> Tuple[np.ndarray, np.ndarray]:
        n = np.array([mode.n for mode in self.modes], dtype=float)
        m = np.array([mode.m for mode in self.modes], dtype=float)
        n.setflags(write=False)
        m.setflags(write=False)
        return n, m

    @cached_property
    def positions(self) -> Dict[Tuple[int, int], int]:
        return {mode.index.as_tuple(): k for k, mode in enumerate(self.modes)}

    @cached_property
    def group_slices(self) -> Tuple[slice, ...]:
        slices, start = [], 0
        for group in self.groups:
            slices.append(slice(start, start + group.multiplicity))
            start += group.multiplicity
        return tuple(slices)

    def position(self, n: int, m: int) -> int:
        return self.positions[(n, m)]

    @property
    def max_multiplicity(self) -> int:
        return max(group.multiplicity for group in self.groups)


def eigenvalue_of(n: int, m: int, domain: RectDomain) -> float:
    return -((n / domain.a1) ** 2 + (m / domain.a2) ** 2) * math.pi ** 2


def build_mode_set(domain: RectDomain, J: int, grouping_tol: float = 1e-9) -> ModeSet:
    """Enumerate the J^2 modes and group them by eigenvalue.

    Two modes share a group when |la - lb| <= grouping_tol * max(|la|, |lb|),
    measured against the first (largest) eigenvalue of the group.
    """
    if not isinstance(domain, RectDomain):
        domain = RectDomain(*domain)
    if J < 1:
        raise ValueError(f"truncation J must be >= 1, got {J}")
    if grouping_tol < 0:
        raise ValueError(f"grouping tolerance must be >= 0, got {grouping_tol}")

    modes = [
        Mode(ModeIndex(n, m), eigenvalue_of(n, m, domain))
        for n in range(1, J + 1)
        for m in range(1, J + 1)
    ]
    modes.sort(key=lambda mode: (-mode.eigenvalue, mode.index))

    buckets: List[List[Mode]] = [[modes[0]]]
    for mode in modes[1:]:
        ref = buckets[-1][0].eigenvalue
        if abs(mode.eigenvalue - ref) <= grouping_tol * max(abs(mode.eigenvalue), abs(ref)):
            buckets[-1].append(mode)
        else:
            buckets.append([mode])

    groups = tuple(
        EigenGroup(
            eigenvalue=float(np.mean([mode.eigenvalue for mode in bucket])),
            modes=tuple(sorted(bucket, key=lambda mode: mode.index)),
        )
        for bucket in buckets
    )
    modeset = ModeSet(domain=domain, J=J, groups=groups, grouping_tol=grouping_tol)
    logger.debug(f"Built {modeset.size} modes in {len(groups)} groups (r = {modeset.max_multiplicity})")
    return modeset


def is_simple_spectrum(modeset: ModeSet) -> bool:
    """True iff every eigenvalue group has multiplicity one"""
    return all(group.multiplicity == 1 for group in modeset.groups)


def max_multiplicity(modeset: ModeSet) -> int:
    return modeset.max_multiplicity


def simplify_spectrum(domain: RectDomain, J: int, grouping_tol: float = 1e-9,
                      eps: float = 1e-3, max_steps: int = 100) -> RectDomain:
    """Slightly stretch a2 until the truncated spectrum is simple.

    The stretch factors 1 + k*eps*sqrt(2)/10 keep a1^2/a2^2 away from the
    small rationals that create repeated eigenvalues.
    """
    if is_simple_spectrum(build_mode_set(domain, J, grouping_tol)):
        return domain
    for k in range(1, max_steps + 1):
        candidate = RectDomain(domain.a1, domain.a2 * (1.0 + k * eps * math.sqrt(2.0) / 10.0))
        if is_simple_spectrum(build_mode_set(candidate, J, grouping_tol)):
            logger.info(f"Spectrum made simple by stretching a2 {domain.a2:.6g} -> {candidate.a2:.10g}")
            return candidate
    raise ValueError(f"no simple-spectrum deformation found within {max_steps} steps")


def _norm(domain: RectDomain) -> float:
    return 2.0 / math.sqrt(domain.a1 * domain.a2)


def eval_eigenfunction(mode: Mode, domain: RectDomain, p: PointLike):
    """phi_nm at p (p may be an array of points with trailing axis 2)"""
    p = domain.require_closure(p)
    kx, ky = mode.n * math.pi / domain.a1, mode.m * math.pi / domain.a2
    value = _norm(domain) * np.sin(kx * p[..., 0]) * np.sin(ky * p[..., 1])
    return float(value) if np.ndim(value) == 0 else value


def eval_eigengradient(mode: Mode, domain: RectDomain, p: PointLike) -> np.ndarray:
    """(d phi/d x1, d phi/d x2) at p; trailing axis of the result has length 2"""
    p = domain.require_closure(p)
    kx, ky = mode.n * math.pi / domain.a1, mode.m * math.pi / domain.a2
    x, y = p[..., 0], p[..., 1]
    c = _norm(domain)
    gx = c * kx * np.cos(kx * x) * np.sin(ky * y)
    gy = c * ky * np.sin(kx * x) * np.cos(ky * y)
    return np.stack([gx, gy], axis=-1)


def eval_laplacian(mode: Mode, domain: RectDomain, p: PointLike):
    """Sum of the analytic second derivatives of phi_nm at p"""
    p = domain.require_closure(p)
    kx, ky = mode.n * math.pi / domain.a1, mode.m * math.pi / domain.a2
    base = _norm(domain) * np.sin(kx * p[..., 0]) * np.sin(ky * p[..., 1])
    value = -(kx ** 2) * base - (ky ** 2) * base
    return float(value) if np.ndim(value) == 0 else value


def boundary_trace_gradient(mode: Mode, domain: RectDomain, gamma: BoundaryRegion, s: float) -> np.ndarray:
    """Gradient of phi_nm at the boundary point with arc coordinate s on gamma"""
    if not bool(np.all(gamma.contains_arc(s))):
        raise OutOfRegion(f"arc coordinate {s} outside {gamma.describe()}")
    return eval_eigengradient(mode, domain, gamma.point_at(domain, s))


def eigenfunction_matrix(modeset: ModeSet, points) -> np.ndarray:
    """(P, N) matrix of every mode evaluated at every point"""
    domain = modeset.domain
    p = np.atleast_2d(domain.require_closure(points))
    n, m = modeset.wave_numbers
    sx = np.sin(np.outer(p[:, 0], n) * (math.pi / domain.a1))
    sy = np.sin(np.outer(p[:, 1], m) * (math.pi / domain.a2))
    return _norm(domain) * sx * sy


def eigengradient_matrix(modeset: ModeSet, points) -> np.ndarray:
    """(P, N, 2) array of every mode gradient at every point"""
    domain = modeset.domain
    p = np.atleast_2d(domain.require_closure(points))
    n, m = modeset.wave_numbers
    kx = n * (math.pi / domain.a1)
    ky = m * (math.pi / domain.a2)
    ax = np.outer(p[:, 0], kx)
    ay = np.outer(p[:, 1], ky)
    c = _norm(domain)
    gx = c * kx * np.cos(ax) * np.sin(ay)
    gy = c * ky * np.sin(ax) * np.cos(ay)
    return np.stack([gx, gy], axis=-1)


@dataclass(frozen=True, eq=False)
class StateCoeffs:
    """Spectral coordinates c_nm = <x0, phi_nm> in the ModeSet's flat mode order"""
    modeset: ModeSet
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.modeset.size:
            raise ValueError(f"expected {self.modeset.size} coefficients, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ValueError("coefficients must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, modeset: ModeSet) -> "StateCoeffs":
        return cls(modeset, np.zeros(modeset.size))

    @classmethod
    def from_modes(cls, modeset: ModeSet, entries: Dict[Tuple[int, int], float]) -> "StateCoeffs":
        values = np.zeros(modeset.size)
        for (n, m), value in entries.items():
            values[modeset.position(n, m)] = value
        return cls(modeset, values)

    def coefficient(self, n: int, m: int) -> float:
        return float(self.values[self.modeset.position(n, m)])

    def __add__(self, other: "StateCoeffs") -> "StateCoeffs":
        return StateCoeffs(self.modeset, self.values + other.values)

    def __sub__(self, other: "StateCoeffs") -> "StateCoeffs":
        return StateCoeffs(self.modeset, self.values - other.values)

    def scaled(self, alpha: float) -> "StateCoeffs":
        return StateCoeffs(self.modeset, alpha * self.values)
