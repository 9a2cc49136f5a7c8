"""Exact projected densities of the level-n measure approximations.

The level-n density in direction theta at x is p^-n times the total chord
length of the fiber through x against all surviving level-n squares.  Two
independent code paths compute it:

* `density` / `density_axial` build the exact merged piecewise
  representation by an event sweep: each square contributes four slope
  events of integer weight (the rise/fall slope 1/(|cos| sin) is the same
  for every same-level square), so the running slope is an exact integer
  count times a constant and only the value accumulation is floating point
  (done in extended precision).
* `density_at` sums per-cell chords directly at query points.

Cross-checking the two paths is one of the package's standing invariants.

Cells are gathered by a window-pruned descent: a cell's projected span
contains every descendant's span, so filtering each level against the query
windows is exact.  Below the materialized depth the descent draws fresh
survival coins from the same counter-based stream, which by the coupling
property agree with any deeper materialization of the same realization --
this is what makes depth-10 evaluations affordable inside narrow windows.

Oblique densities are piecewise linear; axial ones are constant on the open
level-n k-adic intervals, undefined at the k-adic points themselves (strict
mode refuses to evaluate there; one-sided values are available on request).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .addressing import rho_metric
from .errors import (
    AxialModeError,
    FeasibilityError,
    KadicPointError,
    PercoprojError,
)
from .geometry import Direction, HORIZONTAL, DELTA_RANGE
from .params import PercolationParams
from .percolation import PercolationTree, _children
from .randomness import survival_mask, survival_threshold

DESCENT_BUDGET = 20_000_000

KIND_LINEAR = "linear"
KIND_KADIC = "constant_on_kadic"


def as_direction(direction) -> Direction:
    if isinstance(direction, Direction):
        return direction
    if isinstance(direction, str):
        return Direction.parse(direction)
    return Direction.oblique(float(direction))


# ---------------------------------------------------------------------------
# window utilities
# ---------------------------------------------------------------------------


def merge_windows(intervals) -> np.ndarray:
    """Normalize a list of [lo, hi] intervals (points allowed, lo == hi)
    into a sorted, disjoint (m, 2) array."""
    arr = np.atleast_2d(np.asarray(intervals, dtype=float))
    if arr.shape[1] != 2:
        raise ValueError("windows must be pairs [lo, hi]")
    if np.any(arr[:, 0] > arr[:, 1]):
        raise ValueError("window lo > hi")
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    merged = [list(arr[0])]
    for lo, hi in arr[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return np.asarray(merged)


def point_windows(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    return merge_windows(np.column_stack([xs, xs]))


def _overlaps(lo: np.ndarray, hi: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Mask of intervals [lo, hi] meeting the union of windows given by the
    flattened edge array."""
    left = np.searchsorted(edges, lo, side="left")
    right = np.searchsorted(edges, hi, side="right")
    return (left != right) | (left % 2 == 1)


# ---------------------------------------------------------------------------
# pruned descent
# ---------------------------------------------------------------------------


def _span_lo(i: np.ndarray, j: np.ndarray, level: int, d: Direction, k: int) -> np.ndarray:
    scale = float(k) ** (-level)
    c, s = d.cos, d.sin
    if d.is_axial:
        base = i if d.axis == HORIZONTAL else j
        return base.astype(np.float64) * scale
    return (
        i.astype(np.float64) * c + j.astype(np.float64) * s + min(0.0, c)
    ) * scale


def _span_width(level: int, d: Direction, k: int) -> float:
    scale = float(k) ** (-level)
    return scale if d.is_axial else (abs(d.cos) + d.sin) * scale


def descend_levels(
    tree: PercolationTree,
    direction: Direction,
    capture: list[int],
    windows: np.ndarray,
    cap: int = DESCENT_BUDGET,
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Surviving cells at each requested level whose projected span meets the
    window union.  Levels beyond the materialized depth are drawn lazily from
    the tree's own coin stream (coupling-exact)."""
    need = sorted(set(int(m) for m in capture))
    if need[0] < 0:
        raise ValueError("levels must be >= 0")
    deepest = need[-1]
    k = tree.params.k
    edges = np.asarray(windows, dtype=float).ravel()
    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def filter_windows(i, j, level):
        lo = _span_lo(i, j, level, direction, k)
        mask = _overlaps(lo, lo + _span_width(level, direction, k), edges)
        return i[mask], j[mask]

    start = min(deepest, tree.max_depth)
    for m in (m for m in need if m <= start):
        out[m] = filter_windows(*tree.level(m), m)
    if deepest <= tree.max_depth:
        return out
    i, j = out[start] if start in out else filter_windows(*tree.level(start), start)
    thr = survival_threshold(tree.params.p)
    for m in range(start + 1, deepest + 1):
        ci, cj = _children(i, j, k)
        ci, cj = filter_windows(ci, cj, m)
        if len(ci) > cap:
            raise FeasibilityError(
                f"window descent hit {len(ci)} cells at depth {m}, cap {cap}"
            )
        alive = survival_mask(tree.draw_seed(m), m, ci, cj, thr)
        i, j = ci[alive], cj[alive]
        if m in need:
            out[m] = (i, j)
    return out


def cells_on_windows(
    tree: PercolationTree,
    level: int,
    direction: Direction,
    windows: np.ndarray,
    cap: int = DESCENT_BUDGET,
) -> tuple[np.ndarray, np.ndarray]:
    return descend_levels(tree, direction, [level], windows, cap)[level]


# ---------------------------------------------------------------------------
# chord sums (direct evaluation path)
# ---------------------------------------------------------------------------


def _chords_at(
    i: np.ndarray,
    j: np.ndarray,
    level: int,
    params: PercolationParams,
    direction: Direction,
    x: float,
) -> np.ndarray:
    """Chord of each level-`level` cell against the fiber through x."""
    k = params.k
    scale = float(k) ** (-level)
    lo = _span_lo(i, j, level, direction, k)
    if direction.is_axial:
        inside = (lo <= x) & (x <= lo + scale)
        return np.where(inside, scale, 0.0)
    c, s = direction.cos, direction.sin
    a, b = abs(c) * scale, s * scale
    val = np.minimum(np.minimum(a, b), np.minimum(x - lo, lo + a + b - x))
    return np.maximum(val, 0.0) / (abs(c) * s)


def density_at(
    tree: PercolationTree,
    n: int,
    direction,
    xs,
    cap: int = DESCENT_BUDGET,
) -> np.ndarray:
    """Pointwise level-n density values by direct chord summation (the path
    independent of the merged representation).  Allows n beyond the
    materialized depth via the lazy coupled descent."""
    d = as_direction(direction)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    i, j = cells_on_windows(tree, n, d, point_windows(xs), cap)
    weight = tree.params.weight(n)
    return np.array(
        [weight * float(np.sum(_chords_at(i, j, n, tree.params, d, x))) for x in xs]
    )


# ---------------------------------------------------------------------------
# piecewise representation
# ---------------------------------------------------------------------------


@dataclass
class PiecewiseDensity:
    """Exact representation of one level-n projected density.

    * kind == "linear": continuous piecewise-linear, `breakpoints`/`values`,
      zero outside the domain when not windowed.
    * kind == "constant_on_kadic": piecewise constant on open level-n k-adic
      intervals; `codes` are the occupied interval indices, value there is
      counts * p^-n k^-n, zero on unoccupied intervals, undefined at k-adic
      points.

    Windowed densities are only trusted inside `domain`.
    """

    kind: str
    level: int
    params: PercolationParams
    direction: Direction
    domain: tuple[float, float]
    windowed: bool = False
    normalized: bool = False
    seed: int | None = None  # master seed of the source realization, if known
    breakpoints: np.ndarray | None = None
    values: np.ndarray | None = None
    codes: np.ndarray | None = None
    counts: np.ndarray | None = None

    # -- evaluation ---------------------------------------------------------

    def _require_inside(self, x: float) -> None:
        if self.windowed and not (self.domain[0] <= x <= self.domain[1]):
            raise ValueError(
                f"x={x} outside windowed domain {self.domain}; value unknown there"
            )

    @property
    def kadic_unit(self) -> float:
        """Value contributed per surviving row cell in axial mode."""
        return self.params.weight(self.level) * self.params.scale(self.level)

    def evaluate(self, x: float, strict: bool = True, side: str | None = None) -> float:
        """Pointwise value.  Axial strict mode rejects k-adic x of level <=
        n; `side` ("left"/"right") requests a one-sided limit there instead
        (neither is canonical)."""
        self._require_inside(x)
        if self.kind == KIND_LINEAR:
            return float(
                np.interp(x, self.breakpoints, self.values, left=0.0, right=0.0)
            )
        kn = self.params.k**self.level
        fx = Fraction(x) * kn
        if fx.denominator == 1:
            code = int(fx)
            if side == "right":
                pass  # left-closed: the interval starting at x
            elif side == "left":
                code -= 1
            elif strict:
                raise KadicPointError(
                    f"x={x!r} is a k-adic point of level <= {self.level}; "
                    "axial density undefined here (pass side='left'/'right' for a one-sided value)"
                )
        else:
            code = int(fx.__floor__())
        idx = np.searchsorted(self.codes, code)
        if idx < len(self.codes) and int(self.codes[idx]) == code:
            return float(self.counts[idx]) * self.kadic_unit
        return 0.0

    def evaluate_many(self, xs) -> np.ndarray:
        """Vectorized evaluation; axial path uses float flooring, so callers
        must keep xs safely away from k-adic points (>= ~1e-9)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if self.windowed and (
            np.any(xs < self.domain[0]) or np.any(xs > self.domain[1])
        ):
            raise ValueError("some x outside windowed domain")
        if self.kind == KIND_LINEAR:
            return np.interp(xs, self.breakpoints, self.values, left=0.0, right=0.0)
        kn = self.params.k**self.level
        code = np.floor(xs * kn).astype(np.int64)
        idx = np.searchsorted(self.codes, code)
        idx_c = np.minimum(idx, max(len(self.codes) - 1, 0))
        if len(self.codes) == 0:
            return np.zeros_like(xs)
        hit = self.codes[idx_c] == code.astype(np.uint64)
        vals = np.where(hit, self.counts[idx_c].astype(float), 0.0)
        return vals * self.kadic_unit

    __call__ = evaluate_many

    # -- integral quantities --------------------------------------------------

    def mass(self) -> float:
        """Exact integral over the represented domain.  For full-range
        densities this must equal p^-n k^-2n #cells(n)."""
        if self.kind == KIND_LINEAR:
            bp = self.breakpoints.astype(np.longdouble)
            vals = self.values.astype(np.longdouble)
            return float(np.sum(np.diff(bp) * (vals[:-1] + vals[1:]) * 0.5))
        total = int(np.sum(self.counts, dtype=np.int64)) if len(self.counts) else 0
        return total * self.kadic_unit * self.params.scale(self.level)

    def variation(self, interval: tuple[float, float]) -> float:
        """sup - inf over the interval, exact from the representation."""
        lo, hi = interval
        if lo > hi:
            raise ValueError("interval lo > hi")
        self._require_inside(lo)
        self._require_inside(hi)
        if self.kind == KIND_LINEAR:
            inner = self.breakpoints[
                (self.breakpoints > lo) & (self.breakpoints < hi)
            ]
            xs = np.concatenate(([lo], inner, [hi]))
            vals = self.evaluate_many(xs)
            return float(vals.max() - vals.min())
        kn = self.params.k**self.level
        c_lo = int(math.floor(lo * kn))
        c_hi = int(math.ceil(hi * kn)) - 1
        c_hi = max(c_hi, c_lo)
        sel = (self.codes >= c_lo) & (self.codes <= c_hi)
        vals = self.counts[sel].astype(float) * self.kadic_unit
        slots = c_hi - c_lo + 1
        if len(vals) < slots:
            vals = np.concatenate((vals, [0.0]))
        if len(vals) == 0:
            return 0.0
        return float(vals.max() - vals.min())

    # -- serialization ----------------------------------------------------------

    def to_payload(self) -> dict:
        """JSON form {kind, level, theta, breakpoints[], values[], ...}.

        Axial densities are expanded onto the dense k-adic grid covering the
        domain so the payload is a plain breakpoint/value table either way.
        """
        head = {
            "kind": self.kind,
            "level": self.level,
            "k": self.params.k,
            "p": self.params.p,
            "theta": self.direction.axis if self.direction.is_axial else self.direction.theta,
            "domain": [self.domain[0], self.domain[1]],
            "windowed": self.windowed,
            "normalized": self.normalized,
            "seed": self.seed,
        }
        if self.kind == KIND_LINEAR:
            head["breakpoints"] = [float(v) for v in self.breakpoints]
            head["values"] = [float(v) for v in self.values]
            return head
        kn = self.params.k**self.level
        c_lo = int(math.floor(self.domain[0] * kn))
        c_hi = int(math.ceil(self.domain[1] * kn))
        grid = np.arange(c_lo, c_hi + 1, dtype=np.int64)
        dense = np.zeros(max(len(grid) - 1, 0))
        idx = self.codes.astype(np.int64) - c_lo
        inside = (idx >= 0) & (idx < len(dense))
        dense[idx[inside]] = self.counts[inside].astype(float) * self.kadic_unit
        head["breakpoints"] = [float(c) / kn for c in grid]
        head["values"] = [float(v) for v in dense]
        return head

    @classmethod
    def from_payload(cls, payload: dict) -> "PiecewiseDensity":
        params = PercolationParams(k=int(payload["k"]), p=float(payload["p"]))
        theta = payload["theta"]
        direction = (
            Direction(axis=theta) if isinstance(theta, str) else Direction.oblique(theta)
        )
        base = dict(
            kind=payload["kind"],
            level=int(payload["level"]),
            params=params,
            direction=direction,
            domain=tuple(payload["domain"]),
            windowed=bool(payload.get("windowed", False)),
            normalized=bool(payload.get("normalized", False)),
            seed=payload.get("seed"),
        )
        bp = np.asarray(payload["breakpoints"], dtype=float)
        vals = np.asarray(payload["values"], dtype=float)
        if payload["kind"] == KIND_LINEAR:
            return cls(breakpoints=bp, values=vals, **base)
        kn = params.k ** int(payload["level"])
        unit = params.weight(int(payload["level"])) * params.scale(int(payload["level"]))
        codes, counts = [], []
        for left, v in zip(bp[:-1], vals):
            if v > 0:
                code = int(round(left * kn))
                cnt = v / unit
                if abs(cnt - round(cnt)) > 1e-6:
                    raise PercoprojError("axial payload value is not a count multiple")
                codes.append(code)
                counts.append(int(round(cnt)))
        return cls(
            codes=np.asarray(codes, dtype=np.uint64),
            counts=np.asarray(counts, dtype=np.int64),
            **base,
        )

    def sample_csv(self, samples: int) -> str:
        """CSV of (x, value) rows at midpoints of an even partition of the
        domain, with a JSON header line."""
        header = {
            "theta": self.direction.axis if self.direction.is_axial else self.direction.theta,
            "n": self.level,
            "k": self.params.k,
            "p": self.params.p,
            "seed": self.seed,
            "domain": [self.domain[0], self.domain[1]],
        }
        lo, hi = self.domain
        xs = lo + (np.arange(samples) + 0.5) / samples * (hi - lo)
        vals = self.evaluate_many(xs)
        lines = ["# " + json.dumps(header, sort_keys=True), "x,value"]
        lines.extend(f"{x!r},{v!r}" for x, v in zip(xs.tolist(), vals.tolist()))
        return "\n".join(lines) + "\n"


def save_density(density: PiecewiseDensity, path) -> None:
    with open(path, "w") as fh:
        json.dump(density.to_payload(), fh, sort_keys=True)
        fh.write("\n")


def load_density(path) -> PiecewiseDensity:
    with open(path) as fh:
        return PiecewiseDensity.from_payload(json.load(fh))


# ---------------------------------------------------------------------------
# density builders
# ---------------------------------------------------------------------------


def _merged_linear(
    i: np.ndarray,
    j: np.ndarray,
    level: int,
    params: PercolationParams,
    direction: Direction,
    wlo: float,
    whi: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Event-sweep merge of all cell trapezoids restricted to [wlo, whi].

    Slopes are integer multiples of p^-n / (|cos| sin): each cell opens a
    +1 rise at its lowest projected corner, closes it at the near corner,
    opens a -1 fall at the far corner and closes that at the highest corner.
    The running integer count is exact; values accumulate in longdouble.
    """
    c, s = direction.cos, direction.sin
    scale = params.scale(level)
    a, b = abs(c) * scale, s * scale
    lo_c = _span_lo(i, j, level, direction, params.k)
    b0 = lo_c
    b1 = lo_c + min(a, b)
    b2 = lo_c + max(a, b)
    b3 = lo_c + a + b
    q_slope = params.weight(level) / (abs(c) * s)

    v0 = params.weight(level) * float(
        np.sum(_chords_at(i, j, level, params, direction, wlo))
    )
    cnt0 = int(np.count_nonzero((b0 <= wlo) & (wlo < b1))) - int(
        np.count_nonzero((b2 <= wlo) & (wlo < b3))
    )

    pos = np.concatenate([b0, b1, b2, b3])
    delta = np.concatenate(
        [
            np.ones(len(b0)),
            -np.ones(len(b1)),
            -np.ones(len(b2)),
            np.ones(len(b3)),
        ]
    )
    keep = (pos > wlo) & (pos < whi)
    pos, delta = pos[keep], delta[keep]
    upos, inverse = np.unique(pos, return_inverse=True)
    net = np.bincount(inverse, weights=delta).astype(np.int64) if len(pos) else np.empty(0, np.int64)
    nz = net != 0
    upos, net = upos[nz], net[nz]

    breakpoints = np.concatenate(([wlo], upos, [whi]))
    piece_counts = cnt0 + np.concatenate(([0], np.cumsum(net)))
    dx = np.diff(breakpoints)
    steps = (piece_counts * q_slope) * dx
    values = v0 + np.concatenate(
        ([0.0], np.cumsum(steps.astype(np.longdouble)))
    ).astype(np.float64)
    # exact integer slopes keep values >= 0 up to accumulation noise at the tail
    if np.min(values, initial=0.0) < -1e-9:
        raise PercoprojError("negative density from event sweep; inconsistent cells")
    np.clip(values, 0.0, None, out=values)
    return breakpoints, values


def density(
    tree: PercolationTree,
    n: int,
    theta,
    window: tuple[float, float] | None = None,
    cap: int = DESCENT_BUDGET,
) -> PiecewiseDensity:
    """Merged piecewise-linear level-n density for a non-axial direction.

    Without a window this covers the whole projected range and requires the
    level to be materialized.  With a window, any level is allowed: cells are
    gathered by the coupled lazy descent and the result is exact on the
    window (and only there).
    """
    d = as_direction(theta)
    if d.is_axial:
        raise AxialModeError("axial directions use density_axial")
    if window is None:
        if n > tree.max_depth:
            raise ValueError(
                f"full-range density needs n <= max_depth ({tree.max_depth}); "
                "pass a window for deeper coupled evaluation"
            )
        rng = d.range()
        wlo, whi, windowed = rng.lo, rng.hi, False
    else:
        wlo, whi = float(window[0]), float(window[1])
        if wlo >= whi:
            raise ValueError("window must have positive width")
        windowed = True
    i, j = cells_on_windows(tree, n, d, np.array([[wlo, whi]]), cap)
    bp, vals = _merged_linear(i, j, n, tree.params, d, wlo, whi)
    return PiecewiseDensity(
        kind=KIND_LINEAR,
        level=n,
        params=tree.params,
        direction=d,
        domain=(wlo, whi),
        windowed=windowed,
        seed=tree.master_seed,
        breakpoints=bp,
        values=vals,
    )


def density_axial(
    tree: PercolationTree,
    n: int,
    axis: str,
    window: tuple[float, float] | None = None,
    cap: int = DESCENT_BUDGET,
) -> PiecewiseDensity:
    """Axial level-n density: on the open interval with a given digit string
    the value is p^-n k^-n times the number of surviving cells projecting
    onto it."""
    d = Direction(axis=axis)
    if window is None:
        if n > tree.max_depth:
            raise ValueError(
                f"full-range axial density needs n <= max_depth ({tree.max_depth})"
            )
        wlo, whi, windowed = 0.0, 1.0, False
    else:
        wlo, whi = float(window[0]), float(window[1])
        windowed = True
    i, j = cells_on_windows(tree, n, d, np.array([[wlo, whi]]), cap)
    proj = i if d.axis == HORIZONTAL else j
    codes, counts = (
        np.unique(proj, return_counts=True)
        if len(proj)
        else (np.empty(0, np.uint64), np.empty(0, np.int64))
    )
    return PiecewiseDensity(
        kind=KIND_KADIC,
        level=n,
        params=tree.params,
        direction=d,
        domain=(wlo, whi),
        windowed=windowed,
        seed=tree.master_seed,
        codes=codes.astype(np.uint64),
        counts=counts.astype(np.int64),
    )


def density_for(
    tree: PercolationTree,
    n: int,
    direction,
    window: tuple[float, float] | None = None,
    cap: int = DESCENT_BUDGET,
) -> PiecewiseDensity:
    d = as_direction(direction)
    if d.is_axial:
        return density_axial(tree, n, d.axis, window, cap)
    return density(tree, n, d, window, cap)


def mass(d: PiecewiseDensity) -> float:
    return d.mass()


def evaluate(d: PiecewiseDensity, x: float, strict: bool = True, side: str | None = None) -> float:
    return d.evaluate(x, strict=strict, side=side)


def variation(d: PiecewiseDensity, interval: tuple[float, float]) -> float:
    return d.variation(interval)


# ---------------------------------------------------------------------------
# increments, sup distance, Hoelder modulus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IncrementSample:
    """|y_{n+1}(x) - y_n(x)| on one coupled realization."""

    x: float
    direction_label: str
    level: int
    value: float
    y_n: float
    y_next: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("increment magnitude cannot be negative")


def increment(tree: PercolationTree, n: int, direction, x: float, cap: int = DESCENT_BUDGET) -> IncrementSample:
    """Coupled level increment at one point: both densities are computed on
    the same realization (deeper level drawn lazily if unmaterialized)."""
    d = as_direction(direction)
    snaps = descend_levels(tree, d, [n, n + 1], point_windows([x]), cap)
    w = tree.params
    y_n = w.weight(n) * float(np.sum(_chords_at(*snaps[n], n, w, d, x)))
    y_next = w.weight(n + 1) * float(np.sum(_chords_at(*snaps[n + 1], n + 1, w, d, x)))
    return IncrementSample(
        x=x,
        direction_label=d.label,
        level=n,
        value=abs(y_next - y_n),
        y_n=y_n,
        y_next=y_next,
    )


def sup_distance(d1: PiecewiseDensity, d2: PiecewiseDensity, interval: tuple[float, float]) -> float:
    """Exact sup |d1 - d2| over the interval via merged breakpoints."""
    lo, hi = interval
    if lo > hi:
        raise ValueError("interval lo > hi")
    for d in (d1, d2):
        d._require_inside(lo)
        d._require_inside(hi)
    if d1.kind == KIND_LINEAR and d2.kind == KIND_LINEAR:
        inner = np.concatenate([d1.breakpoints, d2.breakpoints])
        inner = inner[(inner > lo) & (inner < hi)]
        xs = np.concatenate(([lo], np.unique(inner), [hi]))
        return float(np.max(np.abs(d1.evaluate_many(xs) - d2.evaluate_many(xs))))
    if d1.kind == KIND_KADIC and d2.kind == KIND_KADIC:
        level = max(d1.level, d2.level)
        kn = max(d1.params.k, d2.params.k) ** level
        c_lo, c_hi = int(math.floor(lo * kn)), int(math.ceil(hi * kn)) - 1
        mids = (np.arange(c_lo, c_hi + 1, dtype=np.float64) + 0.5) / kn
        mids = mids[(mids >= lo) & (mids <= hi)]
        if len(mids) == 0:
            mids = np.array([(lo + hi) / 2])
        return float(np.max(np.abs(d1.evaluate_many(mids) - d2.evaluate_many(mids))))
    raise PercoprojError("sup_distance requires densities of the same kind")


def holder_modulus(
    f,
    pairs,
    alpha: float,
    metric: str = "euclidean",
    params: PercolationParams | None = None,
) -> float:
    """max over sampled pairs of |f(x) - f(y)| / d(x, y)^alpha.

    `f` is a PiecewiseDensity or a vectorized callable; metric "rho" (the
    k-symbolic metric, axial densities only) needs `params` for k.
    Coincident pairs are skipped; returns 0.0 if none remain.
    """
    pairs = np.atleast_2d(np.asarray(pairs, dtype=float))
    if pairs.shape[1] != 2:
        raise ValueError("pairs must have shape (m, 2)")
    fx = f.evaluate_many(pairs[:, 0]) if isinstance(f, PiecewiseDensity) else np.asarray(f(pairs[:, 0]))
    fy = f.evaluate_many(pairs[:, 1]) if isinstance(f, PiecewiseDensity) else np.asarray(f(pairs[:, 1]))
    if metric == "euclidean":
        dist = np.abs(pairs[:, 0] - pairs[:, 1])
    elif metric == "rho":
        if params is None:
            raise ValueError("metric 'rho' needs params for k")
        dist = np.array([rho_metric(params, x, y) for x, y in pairs])
    else:
        raise ValueError(f"unknown metric {metric!r}")
    ok = dist > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(fx - fy)[ok] / dist[ok] ** alpha))


# ---------------------------------------------------------------------------
# range normalization
# ---------------------------------------------------------------------------


def normalize_to_delta(d: PiecewiseDensity) -> PiecewiseDensity:
    """Affine pushforward onto the common range [0, sqrt(2)] (the
    anti-diagonal parameterization): mass-preserving rescale of the axis by
    sqrt(2)/(cos + sin).  First-quadrant oblique directions only."""
    if d.kind != KIND_LINEAR or d.direction.is_axial:
        raise AxialModeError("delta normalization applies to oblique linear densities")
    theta = d.direction.theta
    if not 0.0 < theta < math.pi / 2:
        raise ValueError("delta normalization needs theta in (0, pi/2)")
    if d.normalized:
        raise PercoprojError("density already normalized")
    r = DELTA_RANGE.width / (d.direction.cos + d.direction.sin)
    return PiecewiseDensity(
        kind=KIND_LINEAR,
        level=d.level,
        params=d.params,
        direction=d.direction,
        domain=(d.domain[0] * r, d.domain[1] * r),
        windowed=d.windowed,
        normalized=True,
        seed=d.seed,
        breakpoints=d.breakpoints * r,
        values=d.values / r,
    )


def denormalize_from_delta(d: PiecewiseDensity) -> PiecewiseDensity:
    if not d.normalized:
        raise PercoprojError("density is not normalized")
    r = DELTA_RANGE.width / (d.direction.cos + d.direction.sin)
    return PiecewiseDensity(
        kind=KIND_LINEAR,
        level=d.level,
        params=d.params,
        direction=d.direction,
        domain=(d.domain[0] / r, d.domain[1] / r),
        windowed=d.windowed,
        normalized=False,
        seed=d.seed,
        breakpoints=d.breakpoints / r,
        values=d.values * r,
    )
