"""Generation and refinement of fractal-percolation realizations.

A realization is a random nested family of cell sets: level m+1 keeps each
child of a surviving level-m cell independently with probability p.  Cells
are stored per level as sorted uint64 coordinate pairs (i, j) with
0 <= i, j < k^m.  All coins come from the counter-based stream in
`randomness`, so a realization is fully determined by (k, p, master_seed):
materializing deeper levels, regenerating, or lazily extending below the
stored depth all replay identical draws.

Storage is explicit per level (survival keeps deep levels sparse relative to
k^(2m)); feasibility is guarded by the expected leaf count (k^2 p)^depth
against a configurable cell budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtinctTreeError, FeasibilityError, PercoprojError, RegimeError
from .params import PercolationParams
from .randomness import derive_seed, survival_mask, survival_threshold, survives_one

DEFAULT_CELL_BUDGET = 50_000_000


@dataclass
class PercolationTree:
    """One realization materialized to `max_depth`.

    `level_seeds[m]` is the seed that keyed the survival coins creating level
    m (index 0 is a placeholder; the root is always present).  Plain
    generation uses the master seed at every level; conditional resampling
    swaps in a fresh seed below the resampling depth.
    """

    params: PercolationParams
    master_seed: int
    max_depth: int
    levels: list[tuple[np.ndarray, np.ndarray]]
    level_seeds: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.level_seeds:
            self.level_seeds = (self.master_seed,) * (self.max_depth + 1)

    def level(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        if not 0 <= m <= self.max_depth:
            raise ValueError(f"level {m} out of range [0, {self.max_depth}]")
        return self.levels[m]

    def count(self, m: int) -> int:
        return len(self.level(m)[0])

    def draw_seed(self, m: int) -> int:
        """Seed keying the survival coins of depth m (extends past storage)."""
        if m < len(self.level_seeds):
            return self.level_seeds[m]
        return self.level_seeds[-1]

    def is_extinct_at(self, m: int) -> bool:
        return self.count(m) == 0

    def counts(self) -> list[int]:
        return [len(ii) for ii, _ in self.levels]


def _children(i: np.ndarray, j: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    kk = k * k
    ku = np.uint64(k)
    off = np.arange(k, dtype=np.uint64)
    ci = np.repeat(i * ku, kk) + np.tile(np.repeat(off, k), len(i))
    cj = np.repeat(j * ku, kk) + np.tile(np.tile(off, k), len(i))
    return ci, cj


def _lexsorted(i: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((j, i))
    return i[order], j[order]


def feasibility_estimate(params: PercolationParams, depth: int) -> float:
    """Expected leaf-count (k^2 p)^depth used for the cell budget check."""
    return params.branching_mean**depth


def _check_budget(params: PercolationParams, depth: int, cell_budget: int) -> None:
    est = feasibility_estimate(params, depth)
    if est > cell_budget:
        raise FeasibilityError(
            f"expected cell count (k^2 p)^{depth} = {est:.3g} exceeds budget {cell_budget:.3g}"
        )


def _empty_level() -> tuple[np.ndarray, np.ndarray]:
    return (np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint64))


def _extend_levels(
    params: PercolationParams,
    levels: list[tuple[np.ndarray, np.ndarray]],
    seeds: list[int],
    to_depth: int,
    seed_for: callable,
    cell_budget: int,
) -> None:
    thr = survival_threshold(params.p)
    for lev in range(len(levels), to_depth + 1):
        pi, pj = levels[-1]
        seed = seed_for(lev)
        if len(pi) == 0:
            levels.append(_empty_level())
            seeds.append(seed)
            continue
        ci, cj = _children(pi, pj, params.k)
        alive = survival_mask(seed, lev, ci, cj, thr)
        ci, cj = ci[alive], cj[alive]
        if len(ci) > 4 * cell_budget:
            raise FeasibilityError(
                f"realized cell count {len(ci)} at depth {lev} exceeds 4x budget"
            )
        levels.append(_lexsorted(ci, cj))
        seeds.append(seed)


def generate(
    params: PercolationParams,
    master_seed: int,
    depth: int,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> PercolationTree:
    """Fresh realization to `depth`: root always present, each deeper cell kept
    with probability p given its parent, coins keyed by the master seed."""
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    _check_budget(params, depth, cell_budget)
    levels = [
        (np.zeros(1, dtype=np.uint64), np.zeros(1, dtype=np.uint64))
    ]
    seeds = [master_seed]
    _extend_levels(params, levels, seeds, depth, lambda _: master_seed, cell_budget)
    return PercolationTree(params, master_seed, depth, levels, tuple(seeds))


def refine(
    tree: PercolationTree, new_depth: int, cell_budget: int = DEFAULT_CELL_BUDGET
) -> PercolationTree:
    """Extend the same realization to a larger depth (prefix contract:
    existing levels are shared unchanged)."""
    if new_depth < tree.max_depth:
        raise ValueError(f"new_depth {new_depth} < current max_depth {tree.max_depth}")
    if new_depth == tree.max_depth:
        return tree
    _check_budget(tree.params, new_depth, cell_budget)
    levels = list(tree.levels)
    seeds = list(tree.level_seeds)
    _extend_levels(
        tree.params, levels, seeds, new_depth, tree.draw_seed, cell_budget
    )
    return PercolationTree(tree.params, tree.master_seed, new_depth, levels, tuple(seeds))


def count_cells(tree: PercolationTree, m: int) -> int:
    """Exact number of surviving level-m cells."""
    return tree.count(m)


def z_estimate(tree: PercolationTree, m: int) -> float:
    """Normalized count (k^2 p)^-m * #cells(m); a mean-one martingale in m."""
    return tree.params.branching_mean ** (-m) * tree.count(m)


def resample_children(
    tree: PercolationTree, m: int, subseed: int | None = None
) -> PercolationTree:
    """Fresh conditional draw below depth m: levels <= m shared, survival
    below redrawn from an independent sub-seed."""
    if not 0 <= m < tree.max_depth:
        raise ValueError(f"resampling depth m must satisfy 0 <= m < {tree.max_depth}")
    if subseed is None:
        subseed = derive_seed(tree.master_seed, "resample", m)
    levels = list(tree.levels[: m + 1])
    seeds = list(tree.level_seeds[: m + 1])
    _extend_levels(
        tree.params, levels, seeds, tree.max_depth, lambda _: subseed, DEFAULT_CELL_BUDGET
    )
    return PercolationTree(tree.params, tree.master_seed, tree.max_depth, levels, tuple(seeds))


def dim_theory(params: PercolationParams) -> float:
    """Hausdorff dimension log(k^2 p)/log k of nonempty realizations."""
    params.require_supercritical()
    return math.log(params.branching_mean) / math.log(params.k)


def dim_estimate(tree: PercolationTree) -> float:
    """Least-squares slope of log #cells(m) against m log k over the top half
    of the materialized depth range."""
    if tree.max_depth < 1:
        raise PercoprojError("dim_estimate needs max_depth >= 1")
    if tree.is_extinct_at(tree.max_depth):
        raise ExtinctTreeError("realization extinct at max_depth; no dimension estimate")
    ms = np.arange(tree.max_depth // 2, tree.max_depth + 1)
    counts = np.array([tree.count(int(m)) for m in ms], dtype=float)
    xs = ms * math.log(tree.params.k)
    ys = np.log(counts)
    xbar, ybar = xs.mean(), ys.mean()
    return float(np.sum((xs - xbar) * (ys - ybar)) / np.sum((xs - xbar) ** 2))


def extinction_probability(
    params: PercolationParams, generations: int | None = None, tol: float = 1e-15
) -> float:
    """Extinction probability of the Binomial(k^2, p) branching process, by
    fixed-point iteration of q -> ((1-p) + p q)^(k^2).

    With `generations` set, returns the probability of extinction by that
    finite depth (the n-fold iterate started from 0); otherwise iterates to
    the fixed point.
    """
    kk = params.k * params.k
    g = lambda q: ((1.0 - params.p) + params.p * q) ** kk
    q = 0.0
    if generations is not None:
        for _ in range(generations):
            q = g(q)
        return q
    for _ in range(1_000_000):
        q_next = g(q)
        if abs(q_next - q) <= tol:
            return q_next
        q = q_next
    raise ArithmeticError("extinction fixed-point iteration did not converge")


def survives_to_depth(params: PercolationParams, master_seed: int, depth: int) -> bool:
    """Whether the realization keyed by `master_seed` has any surviving cell
    at `depth`.  Depth-first with short-circuit, so no level is materialized."""
    thr = survival_threshold(params.p)
    k = params.k

    def reachable(level: int, i: int, j: int) -> bool:
        if level == depth:
            return True
        nlevel = level + 1
        for a in range(k):
            for b in range(k):
                ci, cj = i * k + a, j * k + b
                if survives_one(master_seed, nlevel, ci, cj, thr) and reachable(
                    nlevel, ci, cj
                ):
                    return True
        return False

    return depth == 0 or reachable(0, 0, 0)


def level_counts(
    params: PercolationParams,
    master_seed: int,
    depth: int,
    cell_budget: int = DEFAULT_CELL_BUDGET,
    chunk: int = 2_000_000,
) -> list[int]:
    """#cells per level 0..depth without materializing a tree.

    Only the frontier is kept, and the final level is counted in chunks, so
    this reaches one level deeper than `generate` under the same budget.
    """
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    if depth >= 1:
        _check_budget(params, depth - 1, cell_budget)
    thr = survival_threshold(params.p)
    counts = [1]
    i = np.zeros(1, dtype=np.uint64)
    j = np.zeros(1, dtype=np.uint64)
    for lev in range(1, depth + 1):
        if len(i) == 0:
            counts.append(0)
            continue
        if lev == depth:
            total = 0
            for start in range(0, len(i), chunk):
                ci, cj = _children(i[start : start + chunk], j[start : start + chunk], params.k)
                total += int(np.count_nonzero(survival_mask(master_seed, lev, ci, cj, thr)))
            counts.append(total)
            break
        ci, cj = _children(i, j, params.k)
        alive = survival_mask(master_seed, lev, ci, cj, thr)
        i, j = ci[alive], cj[alive]
        counts.append(len(i))
    return counts


def full_tree(params: PercolationParams, depth: int, master_seed: int = 0) -> PercolationTree:
    """Deterministic all-cells-survive tree (for tiling identities and tests)."""
    levels = []
    for m in range(depth + 1):
        side = params.k**m
        if side * side > DEFAULT_CELL_BUDGET:
            raise FeasibilityError(f"full tree at depth {m} has {side * side} cells")
        grid = np.arange(side, dtype=np.uint64)
        i = np.repeat(grid, side)
        j = np.tile(grid, side)
        levels.append((i, j))
    return PercolationTree(params, master_seed, depth, levels)


def tree_from_levels(
    params: PercolationParams,
    levels: list[tuple[np.ndarray, np.ndarray]],
    master_seed: int = 0,
) -> PercolationTree:
    """Hand-built tree from explicit per-level cell arrays (not validated;
    run `verify_structure` to check parent closure and digit ranges)."""
    canonical = [
        _lexsorted(np.asarray(i, dtype=np.uint64), np.asarray(j, dtype=np.uint64))
        for i, j in levels
    ]
    return PercolationTree(params, master_seed, len(levels) - 1, canonical)


def trees_equal(a: PercolationTree, b: PercolationTree) -> bool:
    if a.params != b.params or a.max_depth != b.max_depth:
        return False
    for (ai, aj), (bi, bj) in zip(a.levels, b.levels):
        if len(ai) != len(bi) or not (
            np.array_equal(ai, bi) and np.array_equal(aj, bj)
        ):
            return False
    return True


def is_prefix(shallow: PercolationTree, deep: PercolationTree) -> bool:
    """Coupling check: `shallow` equals `deep` restricted to its depth."""
    if shallow.params != deep.params or shallow.max_depth > deep.max_depth:
        return False
    for m in range(shallow.max_depth + 1):
        si, sj = shallow.level(m)
        di, dj = deep.level(m)
        if not (np.array_equal(si, di) and np.array_equal(sj, dj)):
            return False
    return True


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def verify_structure(tree: PercolationTree) -> list[CheckResult]:
    """Structural invariant walk: digit ranges, uniqueness, parent closure,
    per-level count bounds."""
    from .addressing import format_address, CellAddress

    results = []
    k = tree.params.k
    ok_range, ok_unique, ok_parent, ok_bound = True, True, True, True
    detail_range = detail_unique = detail_parent = detail_bound = "ok"
    for m in range(tree.max_depth + 1):
        i, j = tree.level(m)
        side = k**m
        if len(i) and (int(i.max()) >= side or int(j.max()) >= side):
            ok_range = False
            detail_range = f"digit code out of range at depth {m}"
        codes = i * np.uint64(side) + j
        if len(np.unique(codes)) != len(codes):
            ok_unique = False
            detail_unique = f"duplicate cells at depth {m}"
        if m > 0:
            pi, pj = tree.level(m - 1)
            pside = k ** (m - 1)
            pcodes = np.sort(pi * np.uint64(pside) + pj)
            want = (i // np.uint64(k)) * np.uint64(pside) + (j // np.uint64(k))
            pos = np.searchsorted(pcodes, want)
            orphan = (pos >= len(pcodes)) | (pcodes[np.minimum(pos, max(len(pcodes) - 1, 0))] != want) if len(pcodes) else np.ones(len(want), dtype=bool)
            if len(want) and orphan.any():
                ok_parent = False
                idx = int(np.argmax(orphan))
                addr = CellAddress.from_ints(m, int(i[idx]), int(j[idx]), k)
                detail_parent = f"orphan cell at depth {m}: {format_address(addr, k)}"
            if len(i) > k * k * len(pi):
                ok_bound = False
                detail_bound = f"count at depth {m} exceeds k^2 x parent count"
    results.append(CheckResult("digit-range", ok_range, detail_range))
    results.append(CheckResult("unique-cells", ok_unique, detail_unique))
    results.append(CheckResult("parent-closure", ok_parent, detail_parent))
    results.append(CheckResult("count-bound", ok_bound, detail_bound))
    return results


# ---------------------------------------------------------------------------
# serialization: newline-delimited "depth i_digits j_digits" with a header
# ---------------------------------------------------------------------------

_HEADER_TAG = "# percoproj tree v1"


def serialize_tree(tree: PercolationTree) -> str:
    from .addressing import format_digits, int_to_digits

    k = tree.params.k
    lines = [
        _HEADER_TAG,
        f"k={k} p={tree.params.p!r} seed={tree.master_seed} max_depth={tree.max_depth}",
    ]
    if any(s != tree.master_seed for s in tree.level_seeds):
        lines.append("level_seeds=" + ",".join(str(s) for s in tree.level_seeds))
    for m in range(tree.max_depth + 1):
        i, j = tree.level(m)
        for a, b in zip(i.tolist(), j.tolist()):
            lines.append(
                f"{m} {format_digits(int_to_digits(a, m, k), k)}"
                f" {format_digits(int_to_digits(b, m, k), k)}"
            )
    return "\n".join(lines) + "\n"


def parse_tree(text: str) -> PercolationTree:
    from .addressing import digits_to_int, parse_digits

    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _HEADER_TAG:
        raise PercoprojError(f"tree text must start with {_HEADER_TAG!r}")
    header = dict(item.split("=", 1) for item in lines[1].split())
    k = int(header["k"])
    params = PercolationParams(k=k, p=float(header["p"]))
    master_seed = int(header["seed"])
    max_depth = int(header["max_depth"])
    body = lines[2:]
    level_seeds = (master_seed,) * (max_depth + 1)
    if body and body[0].startswith("level_seeds="):
        level_seeds = tuple(int(s) for s in body[0].split("=", 1)[1].split(","))
        body = body[1:]
    per_level: list[list[tuple[int, int]]] = [[] for _ in range(max_depth + 1)]
    for line in body:
        fields = line.split()
        if len(fields) != 3:
            raise PercoprojError(f"bad tree record {line!r}")
        m = int(fields[0])
        if not 0 <= m <= max_depth:
            raise PercoprojError(f"record depth {m} outside header max_depth")
        i = digits_to_int(parse_digits(fields[1], k), k)
        j = digits_to_int(parse_digits(fields[2], k), k)
        per_level[m].append((i, j))
    levels = []
    for m, cells in enumerate(per_level):
        if cells:
            i = np.array([c[0] for c in cells], dtype=np.uint64)
            j = np.array([c[1] for c in cells], dtype=np.uint64)
            levels.append(_lexsorted(i, j))
        else:
            levels.append(_empty_level())
    if len(levels[0][0]) != 1:
        raise PercoprojError("serialized tree must contain exactly the root at depth 0")
    return PercolationTree(params, master_seed, max_depth, levels, level_seeds)


def save_tree(tree: PercolationTree, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_tree(tree))


def load_tree(path) -> PercolationTree:
    with open(path) as fh:
        return parse_tree(fh.read())
