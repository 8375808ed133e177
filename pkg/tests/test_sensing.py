"""
Tests for sensors, distributions and the gradient/value functionals
"""
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from conftest import gradient_entry, make_mode
from gradsense.errors import (
    EmptySuite,
    InvalidSensorGeometry,
    ModeSetMismatch,
    QuadratureUnderflow,
    UnsupportedCombination,
)
from gradsense.quadrature import QuadratureSpec
from gradsense.sensing import (
    DistributionKind,
    Sensor,
    SensorKind,
    SensorSuite,
    SpatialDistribution,
    apply_output,
    assemble_G,
    gradient_matrix,
    output_matrix,
    sensor_mode_entry,
    sensor_mode_value,
)
from gradsense.spectral_core import (
    BoundaryRegion,
    BoundarySide,
    RectDomain,
    StateCoeffs,
    build_mode_set,
    eval_eigenfunction,
)

QUAD = QuadratureSpec.for_modes(6)


def test_pointwise_center_entry_vanishes(unit_square):
    sensor = Sensor.pointwise((0.5, 0.5))
    assert sensor_mode_entry(sensor, make_mode(1, 1, unit_square), unit_square, QUAD) == pytest.approx(0.0, abs=1e-12)


def test_symmetric_zone_entry_vanishes(unit_square):
    sensor = Sensor.zone((0.5, 0.5), (0.1, 0.15))
    assert sensor_mode_entry(sensor, make_mode(1, 1, unit_square), unit_square, QUAD) == pytest.approx(0.0, abs=1e-12)


def test_pointwise_entry_matches_closed_form(sqrt2_domain):
    sensor = Sensor.pointwise((0.23, 0.41))
    entry = sensor_mode_entry(sensor, make_mode(1, 1, sqrt2_domain), sqrt2_domain, QUAD)
    expected = gradient_entry(1, 1, sqrt2_domain, 0.23, 0.41)
    assert abs(expected) > 0.1
    assert entry == pytest.approx(expected, rel=1e-10)


def test_assemble_single_entry(sqrt2_domain):
    modeset = build_mode_set(sqrt2_domain, 1)
    suite = SensorSuite((Sensor.pointwise((0.23, 0.41)),))
    G = assemble_G(suite, modeset.groups[0], sqrt2_domain, QUAD)
    assert G.shape == (1, 1)
    assert G.entries[0, 0] == pytest.approx(gradient_entry(1, 1, sqrt2_domain, 0.23, 0.41), rel=1e-12)
    assert G.singular_values[0] == pytest.approx(abs(G.entries[0, 0]))


def test_assemble_double_group(unit_square):
    modeset = build_mode_set(unit_square, 2)
    group = modeset.groups[1]
    positions = [(0.23, 0.37), (0.61, 0.18)]
    suite = SensorSuite(tuple(Sensor.pointwise(p) for p in positions))
    G = assemble_G(suite, group, unit_square, QUAD)
    assert G.shape == (2, 2)
    for i, (x, y) in enumerate(positions):
        for j, mode in enumerate(group.modes):
            assert G.entries[i, j] == pytest.approx(gradient_entry(mode.n, mode.m, unit_square, x, y), rel=1e-12)


def test_assemble_empty_suite(unit_square):
    modeset = build_mode_set(unit_square, 1)
    with pytest.raises(EmptySuite):
        assemble_G(SensorSuite(), modeset.groups[0], unit_square, QUAD)


def test_apply_output_single_mode(sqrt2_domain, modes_j3):
    suite = SensorSuite((Sensor.pointwise((0.23, 0.41)),))
    coeffs = StateCoeffs.from_modes(modes_j3, {(1, 1): 1.0})
    mode = modes_j3.modes[modes_j3.position(1, 1)]
    for t in (0.0, 0.05, 0.3):
        y = apply_output(suite, coeffs, modes_j3, t, QUAD)
        expected = math.exp(mode.eigenvalue * t) * eval_eigenfunction(mode, sqrt2_domain, (0.23, 0.41))
        assert y.shape == (1,)
        assert y[0] == pytest.approx(expected, rel=1e-13)


def test_apply_output_zero_state(modes_j3):
    suite = SensorSuite((Sensor.pointwise((0.23, 0.41)), Sensor.zone((0.4, 0.7), (0.1, 0.1))))
    y = apply_output(suite, StateCoeffs.zeros(modes_j3), modes_j3, 0.2, QUAD)
    np.testing.assert_array_equal(y, np.zeros(2))


def test_apply_output_zone_against_riemann_sum(sqrt2_domain, modes_j3):
    center, half = (0.4, 0.7), (0.1, 0.12)
    suite = SensorSuite((Sensor.zone(center, half),))
    rng = np.random.default_rng(2)
    coeffs = StateCoeffs(modes_j3, rng.normal(size=modes_j3.size))
    t = 0.01
    y = apply_output(suite, coeffs, modes_j3, t, QuadratureSpec.for_modes(3))

    # midpoint rule on a 1000 x 1000 grid over the zone
    k = 1000
    xs = center[0] - half[0] + (np.arange(k) + 0.5) * (2 * half[0] / k)
    ys = center[1] - half[1] + (np.arange(k) + 0.5) * (2 * half[1] / k)
    c = 2.0 / math.sqrt(sqrt2_domain.area)
    weighted = coeffs.values * np.exp(modes_j3.eigenvalues * t)
    coefficient_grid = np.zeros((3, 3))
    for mode, value in zip(modes_j3.modes, weighted):
        coefficient_grid[mode.n - 1, mode.m - 1] = value
    sx = np.sin(np.outer(xs, np.arange(1, 4)) * math.pi / sqrt2_domain.a1)
    sy = np.sin(np.outer(ys, np.arange(1, 4)) * math.pi / sqrt2_domain.a2)
    field = c * sx @ coefficient_grid @ sy.T
    oracle = field.sum() * (2 * half[0] / k) * (2 * half[1] / k)
    assert y[0] == pytest.approx(oracle, rel=1e-6)


def test_apply_output_checks(modes_j3, unit_square):
    suite = SensorSuite((Sensor.pointwise((0.23, 0.41)),))
    other = build_mode_set(unit_square, 3)
    with pytest.raises(ModeSetMismatch):
        apply_output(suite, StateCoeffs.zeros(other), modes_j3, 0.0, QUAD)
    with pytest.raises(ValueError):
        apply_output(suite, StateCoeffs.zeros(modes_j3), modes_j3, -1.0, QUAD)


@pytest.mark.parametrize("sensor", [
    Sensor.pointwise((0.23, 0.41)),
    Sensor.zone((0.3, 0.8), (0.1, 0.05), SpatialDistribution.analytic("gaussian", width=0.4)),
    Sensor.boundary_zone([BoundaryRegion(BoundarySide.BOTTOM, 0.1, 0.45)]),
    Sensor.filament([(0.2, 0.3), (0.5, 0.6), (0.8, 0.4)]),
])
def test_entries_linear_in_distribution(sqrt2_domain, modes_j3, sensor):
    alpha = -2.75
    base = gradient_matrix(SensorSuite((sensor,)), modes_j3, QUAD)
    scaled = gradient_matrix(SensorSuite((sensor.scaled(alpha),)), modes_j3, QUAD)
    np.testing.assert_allclose(scaled, alpha * base, rtol=1e-12, atol=1e-12 * np.abs(base).max())


def test_row_permutation(sqrt2_domain, modes_j3):
    suite = SensorSuite((
        Sensor.pointwise((0.23, 0.41)),
        Sensor.zone((0.6, 0.9), (0.1, 0.1)),
        Sensor.boundary_point((0.37, 0.0)),
    ))
    order = [2, 0, 1]
    np.testing.assert_array_equal(
        gradient_matrix(suite.permuted(order), modes_j3, QUAD),
        gradient_matrix(suite, modes_j3, QUAD)[order],
    )


def test_quadrature_refinement(sqrt2_domain):
    modeset = build_mode_set(sqrt2_domain, 6)
    suite = SensorSuite((
        Sensor.zone((0.35, 0.6), (0.12, 0.2), SpatialDistribution.analytic("gaussian", width=0.5)),
        Sensor.boundary_zone([BoundaryRegion(BoundarySide.RIGHT, 0.3, 0.9)],
                             SpatialDistribution.analytic("cosine")),
    ))
    quad = QuadratureSpec.for_modes(6)
    coarse = gradient_matrix(suite, modeset, quad)
    fine = gradient_matrix(suite, modeset, quad.doubled())
    np.testing.assert_allclose(coarse, fine, atol=1e-8)


def test_dirac_on_zone_is_rejected(unit_square):
    sensor = Sensor(SensorKind.INTERNAL_ZONE, SpatialDistribution.dirac(), point=(0.5, 0.5), half_widths=(0.1, 0.1))
    with pytest.raises(UnsupportedCombination):
        sensor.validate(unit_square)


def test_zone_below_resolution(unit_square):
    sensor = Sensor.zone((0.5, 0.5), (1e-14, 1e-14))
    with pytest.raises(QuadratureUnderflow):
        sensor_mode_entry(sensor, make_mode(1, 1, unit_square), unit_square, QUAD)


def test_geometry_validation(unit_square):
    with pytest.raises(InvalidSensorGeometry):
        Sensor.pointwise((2.0, 0.5)).validate(unit_square)
    with pytest.raises(InvalidSensorGeometry):
        Sensor.pointwise((0.0, 0.5)).validate(unit_square)
    with pytest.raises(InvalidSensorGeometry):
        Sensor.boundary_point((0.5, 0.5)).validate(unit_square)
    with pytest.raises(InvalidSensorGeometry):
        Sensor.zone((0.95, 0.5), (0.1, 0.1)).validate(unit_square)
    with pytest.raises(InvalidSensorGeometry):
        Sensor.filament([(0.5, 0.5)]).validate(unit_square)
    assert Sensor.boundary_point((0.0, 0.3)).boundary_side(unit_square) is BoundarySide.LEFT


def test_boundary_zone_value_and_gradient(unit_square):
    # On the top side phi vanishes and only d phi/dy survives
    segment = BoundaryRegion(BoundarySide.TOP, 0.2, 0.5)
    sensor = Sensor.boundary_zone([segment])
    mode = make_mode(2, 1, unit_square)
    assert sensor_mode_value(sensor, mode, unit_square, QUAD) == pytest.approx(0.0, abs=1e-12)
    # integral of 2 * pi * sin(2 pi x) * cos(pi) over [0.2, 0.5]
    expected = -2.0 * math.pi * (math.cos(2 * math.pi * 0.2) - math.cos(2 * math.pi * 0.5)) / (2 * math.pi)
    assert sensor_mode_entry(sensor, mode, unit_square, QUAD) == pytest.approx(expected, rel=1e-10)


def test_boundary_zone_centered_on_node(unit_square):
    segment = BoundaryRegion(BoundarySide.TOP, 1 / 3 - 0.1, 1 / 3 + 0.1)
    sensor = Sensor.boundary_zone([segment])
    assert sensor_mode_entry(sensor, make_mode(3, 1, unit_square), unit_square, QUAD) == pytest.approx(0.0, abs=1e-12)
    assert abs(sensor_mode_entry(sensor, make_mode(1, 1, unit_square), unit_square, QUAD)) > 0.1


def test_filament_matches_line_integral(sqrt2_domain):
    start, end = np.array([0.1, 0.2]), np.array([0.7, 1.0])
    sensor = Sensor.filament([tuple(start), tuple(end)])
    mode = make_mode(2, 3, sqrt2_domain)
    t = np.linspace(0.0, 1.0, 200001)
    x, y = start[0] + t * (end - start)[0], start[1] + t * (end - start)[1]
    c = 2.0 / math.sqrt(sqrt2_domain.area)
    kx, ky = 2 * math.pi / sqrt2_domain.a1, 3 * math.pi / sqrt2_domain.a2
    dense = c * (kx * np.cos(kx * x) * np.sin(ky * y) + ky * np.sin(kx * x) * np.cos(ky * y))
    length = float(np.hypot(*(end - start)))
    oracle = trapezoid(dense, t) * length
    entry = sensor_mode_entry(sensor, mode, sqrt2_domain, QuadratureSpec.for_modes(6))
    assert entry == pytest.approx(oracle, rel=1e-8)


def test_value_functional_matches_output_matrix(sqrt2_domain, modes_j3):
    sensor = Sensor.zone((0.4, 0.7), (0.1, 0.1), SpatialDistribution.analytic("tent"))
    C = output_matrix(SensorSuite((sensor,)), modes_j3, QUAD)
    for k, mode in enumerate(modes_j3.modes):
        assert C[0, k] == pytest.approx(sensor_mode_value(sensor, mode, sqrt2_domain, QUAD), rel=1e-12, abs=1e-14)


def test_distribution_symmetry():
    assert SpatialDistribution.uniform().symmetric
    assert SpatialDistribution.analytic("gaussian").symmetric
    assert not SpatialDistribution.analytic("ramp").symmetric
    grid = [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert SpatialDistribution.tabulated(grid, [0.0, 1.0, 2.0, 1.0, 0.0]).symmetric
    assert not SpatialDistribution.tabulated(grid, [0.0, 1.0, 2.0, 3.0, 0.0]).symmetric
    table = np.outer([0.0, 1.0, 0.0], [1.0, 2.0, 1.0])
    assert SpatialDistribution.tabulated([-1.0, 0.0, 1.0], table, grid_v=[-1.0, 0.0, 1.0]).symmetric


def test_distribution_evaluation():
    one_d = SpatialDistribution.tabulated([-1.0, 0.0, 1.0], [0.0, 2.0, 0.0], scale=0.5)
    np.testing.assert_allclose(one_d.evaluate([-0.5, 0.0, 0.5]), [0.5, 1.0, 0.5])
    two_d = SpatialDistribution.tabulated([-1.0, 1.0], [[0.0, 1.0], [2.0, 3.0]], grid_v=[-1.0, 1.0])
    np.testing.assert_allclose(two_d.evaluate(np.array([0.0]), np.array([0.0])), [1.5])
    assert SpatialDistribution.dirac(3.0).kind is DistributionKind.DIRAC
    with pytest.raises(ValueError):
        SpatialDistribution.analytic("sawtooth")
    with pytest.raises(ValueError):
        SpatialDistribution.tabulated([0.0, -1.0], [1.0, 1.0])


def test_relocated_sensor(unit_square):
    zone = Sensor.zone((0.5, 0.5), (0.1, 0.1))
    moved = zone.relocated((0.3, 0.2), unit_square)
    assert moved.point == (0.3, 0.2)
    assert moved.half_widths == zone.half_widths
    edge = Sensor.boundary_zone([BoundaryRegion(BoundarySide.LEFT, 0.2, 0.4)])
    shifted = edge.relocated(0.5, unit_square)
    assert shifted.segments[0].lo == pytest.approx(0.4)
    assert shifted.segments[0].hi == pytest.approx(0.6)
    on_top = Sensor.boundary_point((0.2, 1.0)).relocated(0.7, unit_square)
    assert on_top.point == (0.7, 1.0)


def test_suite_helpers():
    a, b = Sensor.pointwise((0.2, 0.2)), Sensor.pointwise((0.3, 0.4))
    suite = SensorSuite((a,)).with_sensor(b)
    assert suite.q == 2
    assert list(suite.permuted([1, 0])) == [b, a]


def test_non_square_domain_entries():
    domain = RectDomain(2.0, 0.5)
    modeset = build_mode_set(domain, 2)
    sensor = Sensor.pointwise((1.3, 0.2))
    row = gradient_matrix(SensorSuite((sensor,)), modeset, QUAD)[0]
    for k, mode in enumerate(modeset.modes):
        assert row[k] == pytest.approx(gradient_entry(mode.n, mode.m, domain, 1.3, 0.2), rel=1e-12)
