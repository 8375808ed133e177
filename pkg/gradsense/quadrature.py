"""
Gauss-Legendre quadrature rules on intervals, boxes and polylines
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

from .errors import QuadratureUnderflow

# Supports shorter than this (relative to the domain scale) cannot be resolved
UNDERFLOW_RATIO = 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    """Points per axis for area rules and points per segment for line rules"""
    order: int
    line_order: int

    def __post_init__(self):
        if self.order < 2:
            raise ValueError(f"quadrature order must be >= 2, got {self.order}")
        if self.line_order < 1:
            raise ValueError(f"line quadrature order must be >= 1, got {self.line_order}")

    @classmethod
    def for_modes(cls, J: int) -> "QuadratureSpec":
        """Default rule: 2J+2 points integrates trigonometric integrands up to mode J"""
        n = 2 * J + 2
        return cls(order=n, line_order=n)

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(order=2 * self.order, line_order=2 * self.line_order)


@lru_cache(maxsize=64)
def _reference_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def interval_rule(n: int, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [lo, hi]"""
    nodes, weights = _reference_rule(n)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return mid + half * nodes, half * weights


def box_rule(n: int, x_range: Tuple[float, float], y_range: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on an axis-aligned box: (P, 2) points and (P,) weights"""
    x, wx = interval_rule(n, *x_range)
    y, wy = interval_rule(n, *y_range)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    points = np.column_stack([xx.ravel(), yy.ravel()])
    weights = np.outer(wx, wy).ravel()
    return points, weights


def polyline_rule(vertices: Sequence[Tuple[float, float]], n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arclength rule along a polyline.

    Returns points (P, 2), weights (P,) and the arclength coordinate of each
    point measured from the first vertex.
    """
    verts = np.asarray(vertices, dtype=float)
    ref_nodes, ref_weights = _reference_rule(n)
    t = 0.5 * (ref_nodes + 1.0)
    points, weights, arc = [], [], []
    start = 0.0
    for p0, p1 in zip(verts[:-1], verts[1:]):
        length = float(np.hypot(*(p1 - p0)))
        points.append(p0 + np.outer(t, p1 - p0))
        weights.append(0.5 * length * ref_weights)
        arc.append(start + length * t)
        start += length
    return np.vstack(points), np.concatenate(weights), np.concatenate(arc)


def check_resolvable(extent: float, scale: float, what: str) -> None:
    """Raise QuadratureUnderflow when a support is below machine resolution"""
    if extent <= UNDERFLOW_RATIO * scale:
        raise QuadratureUnderflow(f"{what} extent {extent:.3e} is below quadrature resolution")
