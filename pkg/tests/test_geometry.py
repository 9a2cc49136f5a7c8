import math

import numpy as np
import pytest

import percoproj as pp
from percoproj.errors import AxialModeError
from percoproj.geometry import DELTA_RANGE, trapezoid_integral
from percoproj.oracles import chord_length_clip, chord_length_sampled

SQRT2 = math.sqrt(2.0)
UNIT = pp.Square(0.0, 0.0, 1.0)


def test_project_examples():
    assert pp.project(0.0, (0.3, 0.9)) == 0.3
    assert pp.project(math.pi / 2, (0.3, 0.9)) == pytest.approx(0.9, abs=1e-15)
    assert pp.project(math.pi / 4, (1.0, 1.0)) == pytest.approx(SQRT2, abs=1e-12)


def test_chord_examples():
    assert pp.chord_length_axial(UNIT, "vertical", 0.3) == 1.0
    assert pp.chord_length(UNIT, math.pi / 2, 0.3) == pytest.approx(1.0, abs=1e-12)
    assert pp.chord_length(UNIT, math.pi / 4, SQRT2 / 2) == pytest.approx(SQRT2, abs=1e-12)
    # near-corner fiber: linear ramp with slope 2 along the diagonal axis,
    # value pinned by both independent oracles
    x = 0.1 * SQRT2
    got = pp.chord_length(UNIT, math.pi / 4, x)
    assert got == pytest.approx(0.2 * SQRT2, abs=1e-12)
    assert got == pytest.approx(chord_length_clip(UNIT, math.pi / 4, x), abs=1e-9)
    assert got == pytest.approx(
        chord_length_sampled(UNIT, math.pi / 4, x, samples=1_000_000), abs=1e-3
    )
    # outside the projected span
    assert pp.chord_length(UNIT, math.pi / 4, 1.5) == 0.0
    assert pp.chord_length(UNIT, math.pi / 4, -0.1) == 0.0


def test_chord_against_oracles_random(rng):
    for _ in range(200):
        sq = pp.Square(rng.uniform(0, 0.8), rng.uniform(0, 0.8), rng.uniform(0.05, 0.3))
        theta = rng.uniform(0.02, math.pi - 0.02)
        if abs(theta - math.pi / 2) < 0.02:
            continue
        span = pp.projection_range(theta)
        x = rng.uniform(span.lo - 0.1, span.hi + 0.1)
        assert pp.chord_length(sq, theta, x) == pytest.approx(
            chord_length_clip(sq, theta, x), abs=1e-9
        )


def test_cell_trapezoid_pi3():
    bp, vals = pp.cell_trapezoid(UNIT, math.pi / 3)
    c, s = math.cos(math.pi / 3), math.sin(math.pi / 3)
    assert bp == pytest.approx([0.0, c, s, c + s], abs=1e-12)
    assert vals == pytest.approx([0.0, 1 / s, 1 / s, 0.0], abs=1e-12)
    # interior values match the chord formula
    for x in np.linspace(0.01, c + s - 0.01, 37):
        assert np.interp(x, bp, vals) == pytest.approx(
            pp.chord_length(UNIT, math.pi / 3, x), abs=1e-12
        )


def test_cell_trapezoid_degenerate_plateau():
    bp, vals = pp.cell_trapezoid(UNIT, math.pi / 4)
    assert len(bp) == 3  # plateau degenerates to the apex
    assert bp[1] == pytest.approx(SQRT2 / 2, abs=1e-15)
    assert vals[1] == pytest.approx(SQRT2, abs=1e-12)


def test_cell_trapezoid_integral_is_area(rng):
    for _ in range(50):
        sq = pp.Square(rng.uniform(0, 0.5), rng.uniform(0, 0.5), rng.uniform(0.01, 0.4))
        theta = rng.uniform(0.05, math.pi / 2 - 0.05)
        bp, vals = pp.cell_trapezoid(sq, theta)
        assert trapezoid_integral(bp, vals) == pytest.approx(sq.area, abs=1e-12)


def test_cell_trapezoid_rejects_axial():
    with pytest.raises(AxialModeError):
        pp.cell_trapezoid(UNIT, 0.0)


def test_trapezoid_slope_bound_and_side_independence():
    delta = 0.2
    bound = 1.0 / (math.sin(delta) * math.cos(delta))
    for theta in np.linspace(delta, math.pi / 2 - delta, 9):
        slopes = []
        for n in range(1, 11):
            side = 3.0**-n
            bp, vals = pp.cell_trapezoid(pp.Square(0.1, 0.2, side), theta)
            rise = (vals[1] - vals[0]) / (bp[1] - bp[0])
            slopes.append(rise)
            assert abs(rise) <= bound + 1e-9
        # the rise slope of a single square does not depend on its side
        assert np.ptp(slopes) < 1e-6 * abs(slopes[0])


def test_chord_diagonal_reflection_symmetry(rng):
    for _ in range(100):
        sq = pp.Square(rng.uniform(0, 0.7), rng.uniform(0, 0.7), rng.uniform(0.05, 0.3))
        reflected = pp.Square(sq.y0, sq.x0, sq.side)
        theta = rng.uniform(0.05, math.pi / 2 - 0.05)
        x = rng.uniform(-0.2, 1.6)
        assert pp.chord_length(sq, theta, x) == pytest.approx(
            pp.chord_length(reflected, math.pi / 2 - theta, x), abs=1e-12
        )


def test_projection_range():
    assert pp.projection_range(0.0) == pp.ProjectionRange(0.0, 1.0)
    r = pp.projection_range(math.pi / 4)
    assert (r.lo, r.hi) == pytest.approx((0.0, SQRT2), abs=1e-15)
    r = pp.projection_range(math.pi / 3)
    assert (r.lo, r.hi) == pytest.approx((0.0, 0.5 + math.sqrt(3) / 2), abs=1e-15)
    # second quadrant: negative cosine shifts the low end below zero
    r = pp.projection_range(2.0)
    assert r.lo == pytest.approx(math.cos(2.0), abs=1e-15)
    assert r.hi == pytest.approx(math.sin(2.0), abs=1e-15)


def test_direction_parsing_and_axial_mode():
    assert pp.Direction.parse("vertical").is_axial
    assert pp.Direction.parse("pi/4").theta == pytest.approx(math.pi / 4, abs=1e-15)
    assert pp.Direction.parse("3pi/8").theta == pytest.approx(3 * math.pi / 8, abs=1e-15)
    assert pp.Direction.parse("0.5").theta == 0.5
    assert pp.Direction.parse(1.0).theta == 1.0
    with pytest.raises(AxialModeError):
        pp.Direction.oblique(0.0)
    with pytest.raises(AxialModeError):
        pp.Direction.oblique(math.pi / 2)
    with pytest.raises(ValueError):
        pp.Direction.parse("sideways")
    assert pp.Direction.vertical().range() == pp.ProjectionRange(0.0, 1.0)
    assert pp.Direction.oblique(0.3).delta_margin() == pytest.approx(0.3, abs=1e-15)


def test_delta_range_constant():
    assert DELTA_RANGE.lo == 0.0
    assert DELTA_RANGE.hi == pytest.approx(SQRT2, abs=1e-15)
