"""k-adic symbolic addresses, the k-symbolic metric, and coordinate conversions.

Digits are stored most-significant-first, so the integer code of a digit
string (d_1, ..., d_n) is sum d_l * k^(n-l) and the left endpoint of the
named interval is code / k^n.

Comparisons of reals against k-adic points go through exact rational
arithmetic on the (exact) binary value of the float, which makes strict
mode deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import InvalidAddressError, KadicPointError
from .params import PercolationParams

_DIGIT_CHARS = "0123456789abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class CellAddress:
    """A level-n square named by paired digit strings (one per axis)."""

    depth: int
    i_digits: tuple[int, ...]
    j_digits: tuple[int, ...]

    def __post_init__(self):
        if self.depth < 0:
            raise InvalidAddressError(f"depth must be >= 0, got {self.depth}")
        for name, digits in (("i", self.i_digits), ("j", self.j_digits)):
            if len(digits) != self.depth:
                raise InvalidAddressError(
                    f"{name}-digits have length {len(digits)}, expected {self.depth}"
                )
            if any(d < 0 for d in digits):
                raise InvalidAddressError(f"negative digit in {name}-digits {digits}")

    def validate(self, k: int) -> None:
        for digits in (self.i_digits, self.j_digits):
            for d in digits:
                if d >= k:
                    raise InvalidAddressError(f"digit {d} out of range for k={k}")

    @classmethod
    def from_ints(cls, depth: int, i: int, j: int, k: int) -> "CellAddress":
        return cls(depth, int_to_digits(i, depth, k), int_to_digits(j, depth, k))

    def to_ints(self, k: int) -> tuple[int, int]:
        self.validate(k)
        return digits_to_int(self.i_digits, k), digits_to_int(self.j_digits, k)


@dataclass(frozen=True)
class KadicInterval:
    """Level-n interval [code/k^n, (code+1)/k^n] with its digit string."""

    depth: int
    digits: tuple[int, ...]
    left: float
    right: float


def digits_to_int(digits: Sequence[int], k: int) -> int:
    code = 0
    for d in digits:
        if not 0 <= d < k:
            raise InvalidAddressError(f"digit {d} out of range for k={k}")
        code = code * k + d
    return code


def int_to_digits(code: int, depth: int, k: int) -> tuple[int, ...]:
    if not 0 <= code < k**depth:
        raise InvalidAddressError(f"code {code} out of range for depth {depth}, k={k}")
    out = []
    for _ in range(depth):
        out.append(code % k)
        code //= k
    return tuple(reversed(out))


def format_digits(digits: Sequence[int], k: int) -> str:
    if k > len(_DIGIT_CHARS):
        raise InvalidAddressError(f"text format supports k <= {len(_DIGIT_CHARS)}")
    return "".join(_DIGIT_CHARS[d] for d in digits) if digits else "-"


def parse_digits(text: str, k: int) -> tuple[int, ...]:
    if text in ("", "-"):
        return ()
    try:
        digits = tuple(_DIGIT_CHARS.index(ch) for ch in text.lower())
    except ValueError as exc:
        raise InvalidAddressError(f"bad digit character in {text!r}") from exc
    for d in digits:
        if d >= k:
            raise InvalidAddressError(f"digit {d} out of range for k={k} in {text!r}")
    return digits


def format_address(addr: CellAddress, k: int) -> str:
    """Render as the CLI/file text form, e.g. ``i:120/j:001``."""
    addr.validate(k)
    return f"i:{format_digits(addr.i_digits, k)}/j:{format_digits(addr.j_digits, k)}"


def parse_address(text: str, k: int) -> CellAddress:
    try:
        i_part, j_part = text.split("/")
        assert i_part.startswith("i:") and j_part.startswith("j:")
    except (ValueError, AssertionError) as exc:
        raise InvalidAddressError(f"address text must look like 'i:120/j:001', got {text!r}") from exc
    i_digits = parse_digits(i_part[2:], k)
    j_digits = parse_digits(j_part[2:], k)
    if len(i_digits) != len(j_digits):
        raise InvalidAddressError(f"i and j digit strings differ in length in {text!r}")
    return CellAddress(len(i_digits), i_digits, j_digits)


def cell_square(params: PercolationParams, addr: CellAddress):
    """Closed square of side k^-n at the position given by the digit expansion."""
    from .geometry import Square  # local import to keep geometry free of addressing

    addr.validate(params.k)
    n = addr.depth
    kn = params.k**n
    i = digits_to_int(addr.i_digits, params.k)
    j = digits_to_int(addr.j_digits, params.k)
    return Square(x0=i / kn, y0=j / kn, side=1.0 / kn)


def is_kadic(x: float, max_level: int, k: int) -> bool:
    """True iff x = m / k^max_level for an integer m (covers coarser levels too)."""
    return (Fraction(x) * k**max_level).denominator == 1


def rho_metric(params: PercolationParams, x: float, y: float) -> float:
    """k-symbolic distance: k^-l for the first level l with a k-adic point
    strictly between x and y; 0 when x == y.

    Exact: works on the rational values of the float inputs, so ties with
    k-adic points are decided without tolerance.
    """
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"rho_metric arguments must lie in [0,1], got {x}, {y}")
    if x == y:
        return 0.0
    a, b = (x, y) if x <= y else (y, x)
    fa, fb = Fraction(a), Fraction(b)
    k = params.k
    scaled = k
    for level in range(1, 1200):
        m = (fa * scaled).__floor__() + 1  # smallest integer > a * k^level
        if m < fb * scaled:
            return float(k) ** (-level)
        scaled *= k
    raise ArithmeticError("no separating level found below 1200; inputs too close")


def locate(
    params: PercolationParams, x: float, depth: int, strict: bool = True
) -> KadicInterval:
    """Level-`depth` k-adic interval containing x; digits are the first
    base-k digits of x.

    Strict mode (the default, matching where densities are defined)
    rejects x that is a k-adic point of level <= depth.  Non-strict mode
    uses the left-closed convention, so such x belongs to the interval
    having x as its left endpoint.
    """
    if not 0.0 <= x < 1.0:
        raise ValueError(f"locate requires x in [0,1), got {x}")
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    k = params.k
    kn = k**depth
    fx = Fraction(x) * kn
    if strict and fx.denominator == 1:
        raise KadicPointError(
            f"x = {x!r} is a k-adic point of level <= {depth}; density undefined here"
        )
    code = fx.__floor__()
    return KadicInterval(
        depth=depth,
        digits=int_to_digits(code, depth, k),
        left=code / kn,
        right=(code + 1) / kn,
    )
