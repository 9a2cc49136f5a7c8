"""Orthogonal projections, fiber lines, and exact chords against squares.

The projection in direction theta sends (u, v) to u*cos(theta) + v*sin(theta);
the fiber over x is the perpendicular line through that level set.  For an
axis-aligned square the chord length as a function of x is the convolution of
two box functions, i.e. a trapezoid:

    chord(x) = max(0, min(A, B, x - lo, hi - x)) / (|cos| * sin)

with A = |cos|*side, B = sin*side, lo the smallest projected corner and
hi = lo + A + B.  The rising/falling slope is 1/(|cos|*sin) independent of the
square's side; the plateau value is side / max(|cos|, sin).

Axial directions (theta in {0, pi/2}) are a declared mode, not a float
comparison: fibers run along grid edges there and densities become piecewise
constant, so axial work routes through `Direction` tokens and dedicated code
paths.  `chord_length` itself stays total in theta (the formula degrades
gracefully near axial and only exact zero sin/cos needs the box branch).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import AxialModeError

HORIZONTAL = "horizontal"  # theta = 0: projected coordinate is u
VERTICAL = "vertical"      # theta = pi/2: projected coordinate is v


@dataclass(frozen=True)
class Square:
    """Axis-aligned closed square [x0, x0+side] x [y0, y0+side]."""

    x0: float
    y0: float
    side: float

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError(f"square side must be positive, got {self.side}")

    @property
    def x_interval(self) -> tuple[float, float]:
        return (self.x0, self.x0 + self.side)

    @property
    def y_interval(self) -> tuple[float, float]:
        return (self.y0, self.y0 + self.side)

    @property
    def area(self) -> float:
        return self.side * self.side


@dataclass(frozen=True)
class ProjectionRange:
    """Projected span of the unit square for one direction."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


#: Common target interval for range normalization: the anti-diagonal's span.
DELTA_RANGE = ProjectionRange(0.0, math.sqrt(2.0))


@dataclass(frozen=True)
class Direction:
    """Projection direction: either an axial token or an oblique angle.

    Axial is declared, never inferred from a float: passing theta == 0.0 or
    theta == pi/2 exactly raises and points the caller at the tokens.
    """

    axis: str | None = None
    theta: float | None = None

    def __post_init__(self):
        if (self.axis is None) == (self.theta is None):
            raise ValueError("exactly one of axis/theta must be set")
        if self.axis is not None and self.axis not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"axis must be {HORIZONTAL!r} or {VERTICAL!r}, got {self.axis!r}")
        if self.theta is not None:
            if not 0.0 < self.theta < math.pi:
                raise ValueError(f"oblique theta must lie in (0, pi), got {self.theta}")
            if self.theta == math.pi / 2:
                raise AxialModeError(
                    "theta == pi/2 exactly: use Direction.vertical() (axial is a declared mode)"
                )

    @classmethod
    def oblique(cls, theta: float) -> "Direction":
        if theta == 0.0:
            raise AxialModeError(
                "theta == 0 exactly: use Direction.horizontal() (axial is a declared mode)"
            )
        return cls(theta=float(theta))

    @classmethod
    def horizontal(cls) -> "Direction":
        return cls(axis=HORIZONTAL)

    @classmethod
    def vertical(cls) -> "Direction":
        return cls(axis=VERTICAL)

    @classmethod
    def parse(cls, token: str | float) -> "Direction":
        """CLI/file form: 'horizontal', 'vertical', 'pi/4', '3pi/8', or a radian value."""
        if isinstance(token, (int, float)):
            return cls.oblique(float(token))
        t = token.strip().lower()
        if t in (HORIZONTAL, VERTICAL):
            return cls(axis=t)
        m = re.fullmatch(r"(\d*\.?\d*)\s*pi\s*(?:/\s*(\d+\.?\d*))?", t)
        if m:
            num = float(m.group(1)) if m.group(1) else 1.0
            den = float(m.group(2)) if m.group(2) else 1.0
            return cls.oblique(num * math.pi / den)
        try:
            return cls.oblique(float(t))
        except ValueError as exc:
            raise ValueError(f"cannot parse direction token {token!r}") from exc

    @property
    def is_axial(self) -> bool:
        return self.axis is not None

    @property
    def cos(self) -> float:
        if self.is_axial:
            return 1.0 if self.axis == HORIZONTAL else 0.0
        return math.cos(self.theta)

    @property
    def sin(self) -> float:
        if self.is_axial:
            return 0.0 if self.axis == HORIZONTAL else 1.0
        return math.sin(self.theta)

    @property
    def label(self) -> str:
        return self.axis if self.is_axial else repr(self.theta)

    def range(self) -> ProjectionRange:
        if self.is_axial:
            return ProjectionRange(0.0, 1.0)
        return projection_range(self.theta)

    def delta_margin(self) -> float:
        """Angular distance to the nearest axial direction (0 for axial)."""
        if self.is_axial:
            return 0.0
        t = self.theta % (math.pi / 2)
        return min(t, math.pi / 2 - t)


def project(theta: float, point: tuple[float, float]) -> float:
    """Projected coordinate u*cos(theta) + v*sin(theta)."""
    u, v = point
    return u * math.cos(theta) + v * math.sin(theta)


def projection_range(theta: float) -> ProjectionRange:
    """Projected span of the unit square for a raw angle in [0, pi)."""
    c, s = math.cos(theta), math.sin(theta)
    corners = (0.0, c, s, c + s)
    return ProjectionRange(min(corners), max(corners))


def chord_length(square: Square, theta: float, x: float) -> float:
    """Exact length of the fiber {projection = x} inside the closed square.

    Total in theta: exact axial floats fall back to the box-indicator
    branch, everything else uses the trapezoid formula.
    """
    c, s = math.cos(theta), math.sin(theta)
    h = square.side
    if s == 0.0 or c == 0.0:
        base = square.x0 * c + square.y0 * s
        corners = (0.0, c * h, s * h, (c + s) * h)
        return h if base + min(corners) <= x <= base + max(corners) else 0.0
    lo = square.x0 * c + square.y0 * s + h * min(0.0, c) + h * min(0.0, s)
    a = abs(c) * h
    b = abs(s) * h
    val = min(a, b, x - lo, lo + a + b - x)
    return max(0.0, val) / (abs(c) * abs(s))


def chord_length_axial(square: Square, axis: str, x: float) -> float:
    """Axial chord: full side when x lies in the projected closed interval."""
    if axis == HORIZONTAL:
        lo = square.x0
    elif axis == VERTICAL:
        lo = square.y0
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return square.side if lo <= x <= lo + square.side else 0.0


def cell_trapezoid(square: Square, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoint/value representation of x -> chord_length(square, theta, x).

    Returns (breakpoints, values); the function interpolates linearly between
    breakpoints and is zero outside them.  Breakpoints closer than 1e-12
    relative to the span are merged (the plateau degenerates at theta = pi/4).
    """
    c, s = math.cos(theta), math.sin(theta)
    if c == 0.0 or s == 0.0:
        raise AxialModeError("cell_trapezoid requires a non-axial angle")
    h = square.side
    lo = square.x0 * c + square.y0 * s + h * min(0.0, c) + h * min(0.0, s)
    a, b = abs(c) * h, abs(s) * h
    peak = min(a, b) / (abs(c) * abs(s))
    bp = [lo, lo + min(a, b), lo + max(a, b), lo + a + b]
    vals = [0.0, peak, peak, 0.0]
    span = a + b
    out_bp, out_vals = [bp[0]], [vals[0]]
    for pos, val in zip(bp[1:], vals[1:]):
        if pos - out_bp[-1] <= 1e-12 * span:
            continue
        out_bp.append(pos)
        out_vals.append(val)
    return np.asarray(out_bp), np.asarray(out_vals)


def trapezoid_integral(breakpoints: np.ndarray, values: np.ndarray) -> float:
    """Integral of a piecewise-linear breakpoint/value function."""
    bp = np.asarray(breakpoints, dtype=float)
    vals = np.asarray(values, dtype=float)
    return float(np.sum(np.diff(bp) * (vals[:-1] + vals[1:]) * 0.5))
