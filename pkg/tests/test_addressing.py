import math
from fractions import Fraction

import numpy as np
import pytest

import percoproj as pp
from percoproj.addressing import (
    digits_to_int,
    format_digits,
    int_to_digits,
    is_kadic,
    parse_digits,
)
from percoproj.errors import InvalidAddressError, KadicPointError


def test_cell_square_digit_expansion(params33, params22):
    sq = pp.cell_square(params22, pp.CellAddress(1, (0,), (1,)))
    assert sq.x_interval == (0.0, 0.5)
    assert sq.y_interval == (0.5, 1.0)

    root = pp.cell_square(params33, pp.CellAddress(0, (), ()))
    assert root.x_interval == (0.0, 1.0) and root.y_interval == (0.0, 1.0)

    # hand evaluation of the positional sum: i=(1,2), j=(0,0) at depth 2
    sq = pp.cell_square(params33, pp.CellAddress(2, (1, 2), (0, 0)))
    assert sq.x_interval == pytest.approx((5 / 9, 6 / 9), abs=1e-15)
    assert sq.y_interval == pytest.approx((0.0, 1 / 9), abs=1e-15)


def test_cell_square_side_and_tiling(params33):
    parent = pp.CellAddress(1, (2,), (0,))
    psq = pp.cell_square(params33, parent)
    assert psq.side == pytest.approx(1 / 3, abs=1e-18)
    children = [
        pp.cell_square(params33, pp.CellAddress(2, (2, a), (0, b)))
        for a in range(3)
        for b in range(3)
    ]
    assert all(c.side == pytest.approx(1 / 9, abs=1e-18) for c in children)
    assert sum(c.area for c in children) == pytest.approx(psq.area, abs=1e-15)
    for c in children:
        assert psq.x_interval[0] <= c.x_interval[0] and c.x_interval[1] <= psq.x_interval[1]
        assert psq.y_interval[0] <= c.y_interval[0] and c.y_interval[1] <= psq.y_interval[1]
    # disjoint interiors: lower-left corners are pairwise distinct
    corners = {(c.x0, c.y0) for c in children}
    assert len(corners) == 9


def test_cell_square_rejects_bad_digits(params22):
    with pytest.raises(InvalidAddressError):
        pp.cell_square(params22, pp.CellAddress(1, (2,), (0,)))
    with pytest.raises(InvalidAddressError):
        pp.CellAddress(2, (0,), (0, 1))


def test_rho_examples(params22, params33):
    # first strictly separating dyadic point between 0.1 and 0.4 is 1/4
    assert pp.rho_metric(params22, 0.1, 0.4) == 0.25
    assert pp.rho_metric(params22, 0.4, 0.1) == 0.25
    assert pp.rho_metric(params33, 0.1, 0.9) == pytest.approx(1 / 3, abs=1e-18)
    assert pp.rho_metric(params33, 0.77, 0.77) == 0.0


def test_rho_value_set_and_symmetry(params33, rng):
    k = params33.k
    allowed_exponents = set()
    for _ in range(300):
        x, y = rng.random(), rng.random()
        r = pp.rho_metric(params33, x, y)
        assert r == pp.rho_metric(params33, y, x)
        if x != y:
            lev = round(-math.log(r) / math.log(k))
            assert r == float(k) ** (-lev)
            allowed_exponents.add(lev)
    assert min(allowed_exponents) >= 1


def test_rho_ultrametric_max_property(params33, rng):
    for _ in range(1000):
        x, y, z = sorted(rng.random(3))
        outer = pp.rho_metric(params33, x, z)
        assert outer == max(
            pp.rho_metric(params33, x, y), pp.rho_metric(params33, y, z)
        )


def test_rho_matches_locate_agreement_depth(params33, rng):
    """rho = k^-n exactly when the digit expansions agree through n-1."""
    k = params33.k
    deep = 12
    for _ in range(10_000 // 5):
        x, y = rng.random(), rng.random()
        if x == y:
            continue
        dx = pp.locate(params33, x, deep, strict=False).digits
        dy = pp.locate(params33, y, deep, strict=False).digits
        common = 0
        while common < deep and dx[common] == dy[common]:
            common += 1
        if common == deep:
            continue  # agreement deeper than the probe depth
        assert pp.rho_metric(params33, x, y) == float(k) ** (-(common + 1))


def test_locate_examples(params22, params33):
    iv = pp.locate(params22, 0.3, 2)
    assert iv.digits == (0, 1)
    assert (iv.left, iv.right) == (0.25, 0.5)

    iv = pp.locate(params33, 0.0, 1, strict=False)
    assert iv.digits == (0,)
    assert (iv.left, iv.right) == pytest.approx((0.0, 1 / 3), abs=1e-18)

    with pytest.raises(KadicPointError):
        pp.locate(params22, 0.5, 1)
    # non-strict: left-closed convention puts 0.5 in [0.5, 1)
    assert pp.locate(params22, 0.5, 1, strict=False).digits == (1,)


def test_locate_is_exact_on_floats(params22):
    # 0.3 in binary is slightly below 3/10; exactness applies to the float value
    f = Fraction(0.3)
    assert pp.locate(params22, 0.3, 10, strict=False).digits == tuple(
        int(f * 2 ** (i + 1)) % 2 for i in range(10)
    )


def test_is_kadic_levels(params33):
    assert is_kadic(0.0, 3, 3)
    # the float nearest 1/9 is not the rational 1/9, so exact arithmetic says no
    assert not is_kadic(1 / 9, 2, 3)
    assert is_kadic(0.5, 1, 2)
    assert is_kadic(0.75, 2, 2)
    assert not is_kadic(0.3, 20, 2)


def test_digit_int_roundtrip():
    for k in (2, 3, 5):
        for code in range(min(k**4, 200)):
            digits = int_to_digits(code, 4, k)
            assert digits_to_int(digits, k) == code
    with pytest.raises(InvalidAddressError):
        int_to_digits(16, 2, 2)


def test_address_text_format(params33):
    addr = pp.CellAddress(3, (1, 2, 0), (0, 0, 1))
    text = pp.format_address(addr, 3)
    assert text == "i:120/j:001"
    assert pp.parse_address(text, 3) == addr
    root = pp.CellAddress(0, (), ())
    assert pp.parse_address(pp.format_address(root, 3), 3) == root
    with pytest.raises(InvalidAddressError):
        pp.parse_address("i:130/j:001", 3)  # digit 3 out of range for k=3
    with pytest.raises(InvalidAddressError):
        pp.parse_address("i:12/j:001", 3)  # mismatched lengths
    assert parse_digits(format_digits((0, 1, 2), 3), 3) == (0, 1, 2)
