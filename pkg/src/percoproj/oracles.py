"""Independent cross-check implementations.

Each oracle recomputes a quantity by a route that shares no arithmetic with
the primary path: chords by parametric segment clipping and by stratified
sampling along the fiber, densities by per-cell summation against the merged
representation, extinction by branching-process fixed-point iteration (in
`percolation`).  `verify_realization` bundles the structural walk with
sampled oracle comparisons for the CLI verify command.
"""

from __future__ import annotations

import math

import numpy as np

from .density import density, density_at, density_axial
from .geometry import Direction, Square, cell_trapezoid, trapezoid_integral
from .percolation import CheckResult, PercolationTree, verify_structure


def chord_length_clip(square: Square, theta: float, x: float) -> float:
    """Chord by parametric clipping: the fiber through x is walked against
    both coordinate slabs and the surviving parameter interval measured."""
    c, s = math.cos(theta), math.sin(theta)
    px, py = x * c, x * s  # foot of the fiber
    dx, dy = -s, c  # unit direction along the fiber
    t_lo, t_hi = -math.inf, math.inf
    for p0, d, lo, hi in (
        (px, dx, square.x0, square.x0 + square.side),
        (py, dy, square.y0, square.y0 + square.side),
    ):
        if d == 0.0:
            if not lo <= p0 <= hi:
                return 0.0
            continue
        t1, t2 = (lo - p0) / d, (hi - p0) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_lo, t_hi = max(t_lo, t1), min(t_hi, t2)
    return max(0.0, t_hi - t_lo)


def chord_length_sampled(
    square: Square, theta: float, x: float, samples: int = 1_000_000, seed: int = 0
) -> float:
    """Stratified Monte Carlo length: jittered equispaced points along the
    fiber segment spanned by the square's corner feet, counting hits inside
    the closed square.  Error is bounded by the boundary strata, a few times
    the segment length over `samples`."""
    c, s = math.cos(theta), math.sin(theta)
    px, py = x * c, x * s
    dx, dy = -s, c
    corners = [
        (square.x0 + a * square.side, square.y0 + b * square.side)
        for a in (0, 1)
        for b in (0, 1)
    ]
    ts = [(cx - px) * dx + (cy - py) * dy for cx, cy in corners]
    t_min, t_max = min(ts), max(ts)
    if t_max <= t_min:
        return 0.0
    rng = np.random.default_rng(seed)
    t = t_min + (np.arange(samples) + rng.random(samples)) / samples * (t_max - t_min)
    ux = px + t * dx
    uy = py + t * dy
    inside = (
        (ux >= square.x0)
        & (ux <= square.x0 + square.side)
        & (uy >= square.y0)
        & (uy <= square.y0 + square.side)
    )
    return float((t_max - t_min) * np.mean(inside))


def verify_realization(
    tree: PercolationTree, samples: int = 200, seed: int = 7
) -> list[CheckResult]:
    """Structural walk plus sampled oracle cross-checks on one realization.

    With samples == 0 only the structural checks run.
    """
    results = list(verify_structure(tree))
    if samples <= 0 or tree.max_depth < 1:
        return results
    rng = np.random.default_rng(seed)
    params = tree.params
    n = min(tree.max_depth, 4)

    # chord formula vs clipping oracle on random squares
    worst = 0.0
    for _ in range(samples):
        sq = Square(rng.uniform(0, 0.8), rng.uniform(0, 0.8), rng.uniform(0.05, 0.2))
        theta = rng.uniform(0.05, math.pi / 2 - 0.05)
        bp, _vals = cell_trapezoid(sq, theta)
        xq = rng.uniform(bp[0] - 0.05, bp[-1] + 0.05)
        from .geometry import chord_length

        worst = max(worst, abs(chord_length(sq, theta, xq) - chord_length_clip(sq, theta, xq)))
    results.append(
        CheckResult("chord-clip-oracle", worst <= 1e-9, f"max |diff| = {worst:.3e}")
    )

    # trapezoid integral equals area
    worst = 0.0
    for _ in range(max(samples // 10, 1)):
        sq = Square(rng.uniform(0, 0.8), rng.uniform(0, 0.8), rng.uniform(0.05, 0.2))
        theta = rng.uniform(0.05, math.pi / 2 - 0.05)
        bp, vals = cell_trapezoid(sq, theta)
        worst = max(worst, abs(trapezoid_integral(bp, vals) - sq.area))
    results.append(
        CheckResult("trapezoid-area", worst <= 1e-12, f"max |diff| = {worst:.3e}")
    )

    if tree.is_extinct_at(n):
        results.append(CheckResult("density-cross-path", True, "extinct level: trivially zero"))
        return results

    # merged representation vs direct chord summation at random points
    theta = float(rng.uniform(0.2, math.pi / 2 - 0.2))
    dens = density(tree, n, theta)
    xs = rng.uniform(dens.domain[0], dens.domain[1], size=max(samples // 4, 8))
    direct = density_at(tree, n, Direction.oblique(theta), xs)
    merged = dens.evaluate_many(xs)
    worst = float(np.max(np.abs(direct - merged)))
    scale = max(1.0, float(np.max(direct, initial=0.0)))
    results.append(
        CheckResult(
            "density-cross-path", worst <= 1e-9 * scale, f"max |diff| = {worst:.3e}"
        )
    )

    # mass identity against the cell count
    expected = params.weight(n) * params.scale(n) ** 2 * tree.count(n)
    got = dens.mass()
    results.append(
        CheckResult(
            "mass-identity",
            abs(got - expected) <= 1e-9 * max(1.0, expected),
            f"integral {got!r} vs p^-n k^-2n #cells {expected!r}",
        )
    )
    axial = density_axial(tree, n, "vertical")
    got_ax = axial.mass()
    results.append(
        CheckResult(
            "axial-mass-identity",
            abs(got_ax - expected) <= 1e-9 * max(1.0, expected),
            f"integral {got_ax!r} vs {expected!r}",
        )
    )
    return results
