"""
Shared fixtures for the gradsense test suite
"""
from fractions import Fraction
import math

import pytest
import yaml

from gradsense.quadrature import QuadratureSpec
from gradsense.sensing import Sensor, SensorSuite
from gradsense.spectral_core import (
    BoundaryRegion,
    BoundarySide,
    Mode,
    ModeIndex,
    RectDomain,
    build_mode_set,
    eigenvalue_of,
)

SQRT2 = math.sqrt(2.0)


def make_mode(n: int, m: int, domain: RectDomain) -> Mode:
    return Mode(ModeIndex(n, m), eigenvalue_of(n, m, domain))


def gradient_entry(n: int, m: int, domain: RectDomain, x: float, y: float) -> float:
    """Closed-form d phi/dx + d phi/dy, written out independently of the library"""
    c = 2.0 / math.sqrt(domain.a1 * domain.a2)
    kx, ky = n * math.pi / domain.a1, m * math.pi / domain.a2
    return c * (kx * math.cos(kx * x) * math.sin(ky * y) + ky * math.sin(kx * x) * math.cos(ky * y))


@pytest.fixture
def unit_square():
    return RectDomain(1.0, 1.0)


@pytest.fixture
def sqrt2_domain():
    return RectDomain(1.0, SQRT2)


@pytest.fixture
def top_gamma(sqrt2_domain):
    return BoundaryRegion.full_side(sqrt2_domain, BoundarySide.TOP)


@pytest.fixture
def modes_j3(sqrt2_domain):
    return build_mode_set(sqrt2_domain, 3)


@pytest.fixture
def quad_j3():
    return QuadratureSpec.for_modes(3)


@pytest.fixture
def strategic_suite():
    """Single pointwise sensor at an irrational-looking location on a1=1, a2=sqrt(2)"""
    return SensorSuite((Sensor.pointwise((0.23, 0.41)),))


@pytest.fixture
def center_suite(sqrt2_domain):
    center = (0.5 * sqrt2_domain.a1, 0.5 * sqrt2_domain.a2)
    return SensorSuite((Sensor.pointwise(center, ratios=(Fraction(1, 2), Fraction(1, 2))),))


@pytest.fixture
def base_config():
    """Run configuration for the strategic single-sensor problem"""
    return {
        "domain": {"a1": 1, "a2": "sqrt(2)"},
        "gamma": {"side": "top", "lo": "0", "hi": "1"},
        "modes": {"J": 3},
        "sensors": [{"kind": "internal_pointwise", "point": [0.23, 0.41]}],
        "time": {"T": 1.0, "dt": 0.01},
        "initial_state": {"kind": "bump"},
    }


@pytest.fixture
def write_config(tmp_path):
    """Dump a config dict to YAML and return its path"""
    def write(data, name="config.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
        return str(path)
    return write
