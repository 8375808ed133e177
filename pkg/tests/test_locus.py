"""
Tests for the closed-form non-strategic loci and their agreement with the rank test
"""
from fractions import Fraction

import pytest

from conftest import SQRT2
from gradsense.errors import IrrationalUnsupported
from gradsense.quadrature import QuadratureSpec
from gradsense.sensing import Sensor, SensorSuite, SpatialDistribution
from gradsense.spectral_core import BoundaryRegion, BoundarySide, RectDomain, build_mode_set
from gradsense.strategic_analysis import LocusRule, locus_check, rank_test

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)


def _top(domain):
    return BoundaryRegion.full_side(domain, BoundarySide.TOP)


def test_symmetric_zone_at_center(unit_square):
    sensor = Sensor.zone((0.5, 0.5), (0.1, 0.1), ratios=(HALF, HALF))
    report = locus_check(sensor, unit_square, _top(unit_square), 3)
    assert report.applicable and report.non_strategic_by_locus
    assert report.matched_rule is LocusRule.SYMMETRIC_ZONE
    assert report.matched_rule.value == "cor_4_1"
    assert report.witness_mode == (1, 1)


def test_boundary_zone_one_side(unit_square):
    segment = BoundaryRegion(BoundarySide.TOP, 1 / 3 - 0.1, 1 / 3 + 0.1)
    sensor = Sensor.boundary_zone([segment], ratios=(THIRD,))
    report = locus_check(sensor, unit_square, _top(unit_square), 3)
    assert report.non_strategic_by_locus
    assert report.matched_rule.value == "cor_4_2_one_side"
    assert report.witness_mode == (3, 1)
    below = locus_check(sensor, unit_square, _top(unit_square), 2)
    assert below.applicable and not below.non_strategic_by_locus


def test_boundary_zone_two_sides(sqrt2_domain):
    sensor = Sensor.boundary_zone([
        BoundaryRegion(BoundarySide.TOP, 0.4, 0.6),
        BoundaryRegion(BoundarySide.RIGHT, SQRT2 / 3 - 0.1, SQRT2 / 3 + 0.1),
    ], ratios=(HALF, THIRD))
    report = locus_check(sensor, sqrt2_domain, _top(sqrt2_domain), 3)
    assert report.matched_rule is LocusRule.BOUNDARY_ZONE_TWO_SIDE
    assert report.witness_mode == (2, 3)
    assert report.non_strategic_by_locus


def test_irrational_pointwise(sqrt2_domain):
    sensor = Sensor.pointwise((0.23, 0.41), ratios=(None, None))
    report = locus_check(sensor, sqrt2_domain, _top(sqrt2_domain), 5)
    assert report.applicable and not report.non_strategic_by_locus
    assert report.matched_rule is LocusRule.POINTWISE
    assert "irrational" in report.witness
    with pytest.raises(IrrationalUnsupported):
        locus_check(sensor, sqrt2_domain, _top(sqrt2_domain), 5, strict=True)


def test_missing_ratios_count_as_irrational(sqrt2_domain):
    report = locus_check(Sensor.pointwise((0.23, 0.41)), sqrt2_domain, _top(sqrt2_domain), 5)
    assert report.applicable and not report.non_strategic_by_locus


@pytest.mark.parametrize("ratios,witness", [
    ((HALF, HALF), (1, 1)),
    ((Fraction(1, 4), Fraction(3, 4)), (2, 2)),
    ((THIRD, HALF), (3, 2)),
    ((Fraction(2, 5), Fraction(1, 7)), (5, 7)),
])
def test_pointwise_witness(sqrt2_domain, ratios, witness):
    point = (float(ratios[0]) * sqrt2_domain.a1, float(ratios[1]) * sqrt2_domain.a2)
    report = locus_check(Sensor.pointwise(point, ratios=ratios), sqrt2_domain, _top(sqrt2_domain), 6)
    assert report.witness_mode == witness
    assert report.non_strategic_by_locus == (max(witness) <= 6)


def test_non_symmetric_distribution_declines(unit_square):
    sensor = Sensor.zone((0.5, 0.5), (0.1, 0.1), SpatialDistribution.analytic("ramp"), ratios=(HALF, HALF))
    report = locus_check(sensor, unit_square, _top(unit_square), 3)
    assert not report.applicable and not report.non_strategic_by_locus
    assert report.matched_rule is LocusRule.NONE
    declared = Sensor.zone((0.5, 0.5), (0.1, 0.1), SpatialDistribution.analytic("ramp"),
                           ratios=(HALF, HALF), symmetric=True)
    assert locus_check(declared, unit_square, _top(unit_square), 3).non_strategic_by_locus


def test_boundary_pointwise_vertical_side(sqrt2_domain):
    sensor = Sensor.boundary_point((0.0, SQRT2 / 4), ratios=(Fraction(0), Fraction(1, 4)))
    fired = locus_check(sensor, sqrt2_domain, _top(sqrt2_domain), 4)
    assert fired.matched_rule.value == "cor_4_4"
    assert fired.witness_mode == (1, 4) and fired.non_strategic_by_locus and not fired.interpreted
    assert not locus_check(sensor, sqrt2_domain, _top(sqrt2_domain), 3).non_strategic_by_locus


def test_boundary_pointwise_horizontal_side(unit_square):
    sensor = Sensor.boundary_point((1 / 3, 1.0), ratios=(THIRD, Fraction(1)))
    report = locus_check(sensor, unit_square, _top(unit_square), 3)
    assert report.witness_mode == (3, 1)
    assert report.interpreted and report.non_strategic_by_locus


def test_filament_locus(unit_square):
    sensor = Sensor.filament([(0.25, 0.25), (0.75, 0.75)], ratios=(HALF, HALF))
    report = locus_check(sensor, unit_square, _top(unit_square), 2)
    assert report.matched_rule is LocusRule.FILAMENT
    assert report.interpreted and report.non_strategic_by_locus
    bent = Sensor.filament([(0.25, 0.25), (0.5, 0.7), (0.75, 0.75)], center=(0.5, 0.5), ratios=(HALF, HALF))
    assert locus_check(bent, unit_square, _top(unit_square), 2).matched_rule is LocusRule.NONE


def test_invalid_truncation(unit_square):
    with pytest.raises(ValueError):
        locus_check(Sensor.pointwise((0.5, 0.5)), unit_square, _top(unit_square), 0)


def _fired_sensors(domain):
    a1, a2 = domain.a1, domain.a2
    return [
        Sensor.zone((a1 / 2, a2 / 2), (0.1, 0.1), ratios=(HALF, HALF)),
        Sensor.zone((a1 / 3, a2 / 2), (0.05, 0.1), SpatialDistribution.analytic("gaussian"), ratios=(THIRD, HALF)),
        Sensor.pointwise((a1 / 4, 3 * a2 / 4), ratios=(Fraction(1, 4), Fraction(3, 4))),
        Sensor.pointwise((2 * a1 / 3, a2 / 3), ratios=(Fraction(2, 3), THIRD)),
        Sensor.boundary_zone([BoundaryRegion(BoundarySide.TOP, a1 / 3 - 0.1, a1 / 3 + 0.1)], ratios=(THIRD,)),
        Sensor.boundary_zone([
            BoundaryRegion(BoundarySide.BOTTOM, a1 / 2 - 0.2, a1 / 2 + 0.2),
            BoundaryRegion(BoundarySide.LEFT, a2 / 3 - 0.1, a2 / 3 + 0.1),
        ], ratios=(HALF, THIRD)),
        Sensor.boundary_point((a1, a2 / 2), ratios=(Fraction(1), HALF)),
        Sensor.boundary_point((a1 / 3, 0.0), ratios=(THIRD, Fraction(0))),
        Sensor.filament([(a1 / 4, a2 / 4), (3 * a1 / 4, 3 * a2 / 4)], ratios=(HALF, HALF)),
    ]


@pytest.mark.parametrize("domain", [RectDomain(1.0, SQRT2), RectDomain(1.3, 0.8)])
def test_fired_locus_implies_rank_failure(domain):
    J = 3
    modeset = build_mode_set(domain, J)
    quad = QuadratureSpec.for_modes(J)
    gamma = _top(domain)
    for sensor in _fired_sensors(domain):
        report = locus_check(sensor, domain, gamma, J)
        assert report.non_strategic_by_locus, sensor
        n, m = report.witness_mode
        verdict = rank_test(SensorSuite((sensor,)), modeset, gamma, quad)
        assert not verdict.strategic, sensor
        failing_modes = {verdict.per_group[k].modes for k in verdict.failing_groups}
        assert any((n, m) in modes for modes in failing_modes), sensor
