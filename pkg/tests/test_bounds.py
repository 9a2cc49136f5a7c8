import math

import pytest

import percoproj as pp
from percoproj.bounds import grid_union_failure
from percoproj.errors import RegimeError


def test_hoeffding_examples():
    assert pp.hoeffding_bound(1.0, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert pp.hoeffding_bound(1e-9, 1.0) == pytest.approx(1.0, abs=1e-9)
    # invert the exponential: a^2 = 2 upsilon ln 10 makes the bound exactly 0.1
    ups = 0.37
    a = math.sqrt(2 * ups * math.log(10.0))
    assert pp.hoeffding_bound(a, ups) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ValueError):
        pp.hoeffding_bound(0.0, 1.0)


def test_concentration_base():
    inv = 1.0 / (2.0 * math.sqrt(2.0))
    assert pp.concentration_base(0.5) == pytest.approx(math.exp(-inv * 0.25 / 0.5), abs=1e-15)
    assert pp.concentration_base(0.5) == pytest.approx(0.83797, abs=1e-5)
    assert pp.concentration_base(0.7) == pytest.approx(math.exp(-inv * 0.49 / 0.7), abs=1e-15)
    # denominator is max(p, 1-p): at p=0.3 it is 0.7
    assert pp.concentration_base(0.3) == pytest.approx(math.exp(-inv * 0.09 / 0.7), abs=1e-15)
    assert pp.concentration_base(1e-9) == pytest.approx(1.0, abs=1e-8)
    assert 0.0 < pp.concentration_base(0.999) < 1.0


def test_taming_depth(params33):
    n0 = pp.taming_depth(params33)
    assert n0 == 10
    pk = 2.1
    rhs = pk ** (1 / 8)
    assert 1 + pk ** (-n0 / 3) < rhs  # defining inequality
    assert not 1 + pk ** (-(n0 - 1) / 3) < rhs  # neighbor violates
    assert 1 + pk ** (-5 * n0 / 12) < pk**0.25  # implied consequence
    assert pp.taming_depth(pp.PercolationParams(10, 0.9)) == 2
    with pytest.raises(RegimeError):
        pp.taming_depth(pp.PercolationParams(2, 0.4))


def test_taming_depth_monotone_in_pk():
    values = [
        pp.taming_depth(pp.PercolationParams(3, p))
        for p in (0.35, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    ]
    assert values == sorted(values, reverse=True)


def test_envelope_factor(params33):
    assert pp.envelope_factor(params33) == 5
    # ceil(-8 log_pk p) is a positive integer for every p < 1, so the factor
    # bottoms out at 2 as p -> 1 (consistent with it having to exceed 1)
    assert pp.envelope_factor(pp.PercolationParams(2, 0.99999)) == 2
    for k, p in [(2, 0.6), (3, 0.4), (5, 0.8), (4, 0.3)]:
        lv = pp.envelope_factor(pp.PercolationParams(k, p))
        n0 = pp.taming_depth(pp.PercolationParams(k, p))
        pk = k * p
        assert (pk ** (lv * n0 / 4)) > (pk ** ((lv - 1) * n0 / 8)) * p ** (-n0)


def test_increment_thresholds(params33):
    pk = 2.1
    th = pp.increment_thresholds(params33, 4, y=1.0)
    assert th.part_i_allowance == pytest.approx(pk ** (-4 / 3), rel=1e-12)
    assert th.part_ii_allowance == pytest.approx(pk ** (-4 / 6), rel=1e-12)
    th0 = pp.increment_thresholds(params33, 0, y=2.0)
    assert th0.part_ii_allowance == 1.0
    # exponent chain at n=6: gamma(0.7)^(pk^2)
    th6 = pp.increment_thresholds(params33, 6, y=1.0)
    gamma = pp.concentration_base(0.7)
    assert th6.failure_exponent == pytest.approx(gamma ** (pk**2), rel=1e-12)
    assert th6.failure_exponent == pytest.approx(0.33573, abs=1e-4)
    # general y scaling
    th_y = pp.increment_thresholds(params33, 3, y=4.0)
    expected = (0.7 * 3) ** -3 * ((0.7 * 3) ** 3 * 4.0) ** (2 / 3)
    assert th_y.part_i_allowance == pytest.approx(expected, rel=1e-12)


def test_tail_failure_sum(params33):
    big = pp.tail_failure_sum(params33, 30)
    assert big.value < 1e-6
    s1 = pp.tail_failure_sum(params33, 5, epsilon=1e-8)
    s2 = pp.tail_failure_sum(params33, 5, epsilon=0.5e-8)
    assert abs(s1.value - s2.value) <= 1e-8 * s1.value + 1e-300
    # halving ratio sets in at some finite level
    small_n = pp.tail_failure_sum(params33, 1)
    assert small_n.half_ratio_from >= 1
    assert small_n.monotone_from >= 1
    assert small_n.value > 0


def test_envelope_probability(params33):
    # the lower summation index trails by the envelope factor, so the bound
    # approaches 1 only once n/L is deep enough
    large = pp.envelope_probability(params33, 150)
    assert large.raw == pytest.approx(1.0, abs=1e-10)
    assert not large.vacuous
    n0 = pp.taming_depth(params33)
    lv = pp.envelope_factor(params33)
    boundary = pp.envelope_probability(params33, lv * n0)
    assert boundary.clamped == max(0.0, boundary.raw)
    # frozen on first run at the boundary level L * N0 = 50
    assert boundary.raw == pytest.approx(0.912912456533111, rel=1e-12)
    # small n can be vacuous; clamped stays a probability
    small = pp.envelope_probability(params33, 2)
    assert small.clamped >= 0.0
    assert small.vacuous == (small.raw < 0.0)
    # nondecreasing beyond the early index shifts
    vals = [pp.envelope_probability(params33, n).raw for n in range(40, 80)]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


def test_grid_mesh(params33):
    spec0 = pp.grid_mesh(params33, 0, 0.3)
    assert spec0.mesh == pytest.approx(0.3, abs=1e-15)
    a = pp.grid_mesh(params33, 4, 0.1)
    b = pp.grid_mesh(params33, 4, 0.2)
    assert b.mesh == pytest.approx(2 * a.mesh, rel=1e-12)
    got = pp.grid_mesh(params33, 6, 0.1)
    assert got.mesh == pytest.approx(0.1 * 0.7**5 / 3**7, rel=1e-12)
    assert got.cardinality_bound == pytest.approx(10.0 * 0.7**-5 * 3**7, rel=1e-12)
    with pytest.raises(ValueError):
        pp.grid_mesh(params33, 2, 0.0)


def test_depth_relation(params33):
    rel = pp.depth_relation(params33, 20, 0.1)
    assert rel.n == 12
    coef = 7 / 6 + (5 / 6) * math.log(1 / 0.7) / math.log(3)
    base = math.log(10.0) / math.log(3)
    assert 20 > coef * rel.n + base  # returned n satisfies strictly
    assert not 20 > coef * (rel.n + 1) + base  # successor violates
    assert rel.l_prime == pytest.approx(1 / coef, rel=1e-12)
    assert rel.l_double_prime == pytest.approx(base / coef, rel=1e-12)
    # maximality contract at delta = 1 (no offset term)
    params_hi = pp.PercolationParams(2, 0.999999)
    rel2 = pp.depth_relation(params_hi, 7, 1.0)
    assert 7 > 7 * rel2.n / 6 + (5 * rel2.n / 6) * math.log(1 / 0.999999) / math.log(2)
    # monotone nondecreasing in N
    ns = [pp.depth_relation(params33, big_n, 0.1).n for big_n in range(5, 40)]
    assert all(b >= a for a, b in zip(ns, ns[1:]))
    with pytest.raises(ValueError):
        pp.depth_relation(params33, 1, 1e-9)


def test_grid_union_failure(params33):
    out = grid_union_failure(params33, 4, 0.1)
    assert out.prefactor == pytest.approx(100.0 * 0.7 ** (-20 / 3) * 3 ** (28 / 3), rel=1e-9)
    assert out.product == pytest.approx(out.prefactor * out.tail, rel=1e-12)
    # vacuous at desk scale, as documented
    assert out.vacuous


def test_borel_cantelli_style_summability(params33):
    """sum over N of k^N x (envelope failure + tail failure) converges."""
    k = params33.k
    n0 = pp.taming_depth(params33)

    def term(big_n: int) -> float:
        env_fail = 1.0 - pp.envelope_probability(params33, big_n).raw
        tail = pp.tail_failure_sum(params33, big_n).value
        return float(k) ** big_n * (env_fail + tail)

    # terms grow until the double exponential overtakes k^N (around N ~ 90
    # for these parameters) and then collapse to zero; the partial sums
    # stabilize shortly after the peak
    partial = 0.0
    partials = []
    for big_n in range(n0, 130):
        partial += term(big_n)
        partials.append(partial)
    assert math.isfinite(partials[-1])
    assert abs(partials[-1] - partials[-15]) <= 1e-6 * max(partials[-1], 1e-300)


def test_constants_report_shape(params33):
    rep = pp.constants_report(3, 0.7, delta=0.1, n=6, big_n=20)
    assert rep["gamma"] == pytest.approx(pp.concentration_base(0.7), abs=1e-15)
    assert rep["taming_depth"] == 10
    assert rep["envelope_factor"] == 5
    assert rep["dim_theory"] == pytest.approx(math.log(6.3) / math.log(3), abs=1e-15)
    assert rep["depth_relation"]["n"] == 12
    assert rep["grid_union_failure"]["vacuous"] is True
    sub = pp.constants_report(2, 0.4)
    assert "regime_warning" in sub
    assert sub["dim_theory"] is not None  # k^2 p = 1.6 > 1 even though kp < 1
    sub2 = pp.constants_report(2, 0.2)
    assert sub2["dim_theory"] is None
