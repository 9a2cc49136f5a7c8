"""Closed-form evaluators for concentration thresholds and depth constants.

Everything here is deterministic and total on its stated domain.  The theory
behind the toolkit only proves *existence* of several prefactors; numeric
outputs default each of those to 1 and the experiment layer fits empirical
values instead of assuming them.  Values that would make a probability bound
negative are reported with a `vacuous` flag rather than silently clamped.

All (pk)-power expressions require the projection regime kp > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RegimeError
from .params import PercolationParams


def hoeffding_bound(a: float, upsilon: float) -> float:
    """Tail bound exp(-a^2 / (2 upsilon)) for a sum of centered bounded
    variables with total sup-norm `upsilon`."""
    if a <= 0 or upsilon <= 0:
        raise ValueError("hoeffding_bound needs a > 0 and upsilon > 0")
    return math.exp(-a * a / (2.0 * upsilon))


def concentration_base(p: float) -> float:
    """Base of the double-exponential failure probability for one-step
    density increments: exp(-(1/(2 sqrt 2)) p^2 / max(p, 1-p)), always in (0,1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0,1), got {p}")
    return math.exp(-(1.0 / (2.0 * math.sqrt(2.0))) * p * p / max(p, 1.0 - p))


def taming_depth(params: PercolationParams) -> int:
    """Smallest positive integer N with 1 + (pk)^(-N/3) < (pk)^(1/8):
    beyond this depth the relative one-step growth allowance stays below one
    eighth of a (pk)-power per level.

    Also asserts the implied looser inequality 1 + (pk)^(-5N/12) < (pk)^(1/4)
    that downstream arguments rely on.
    """
    params.require_projection_regime()
    pk = params.pk()
    rhs = pk ** (1.0 / 8.0)
    for n0 in range(1, 10_000_000):
        if 1.0 + pk ** (-n0 / 3.0) < rhs:
            if not 1.0 + pk ** (-5.0 * n0 / 12.0) < pk**0.25:
                raise ArithmeticError("implied depth inequality failed; numeric anomaly")
            return n0
    raise ArithmeticError("no taming depth below 1e7; pk too close to 1")


def envelope_factor(params: PercolationParams) -> int:
    """Integer L = ceil(-8 log_pk p) + 1: past depth L times the taming
    depth, the density has provably entered the (pk)^(n/4) envelope.

    Asserts the defining consequence
    (pk)^(L N0 / 4) > (pk)^((L-1) N0 / 8) * p^(-N0) for the computed pair.
    """
    params.require_projection_regime()
    pk = params.pk()
    l_value = math.ceil(-8.0 * math.log(params.p) / math.log(pk)) + 1
    n0 = taming_depth(params)
    lhs = (l_value * n0 / 4.0) * math.log(pk)
    rhs = ((l_value - 1) * n0 / 8.0) * math.log(pk) - n0 * math.log(params.p)
    if not lhs > rhs:
        raise ArithmeticError("envelope factor consequence failed; numeric anomaly")
    return l_value


@dataclass(frozen=True)
class IncrementThresholds:
    """Per-level allowances for one-step density increments at level n.

    `part_i_allowance` is the additive growth allowance
    p^-n k^-n (p^n k^n y)^(2/3) valid when the current value y exceeds 1;
    `part_ii_allowance` is the absolute allowance (pk)^(-n/6) valid when
    y < (pk)^(n/3); `failure_exponent` is gamma^((pk)^(n/3)), the
    double-exponential factor multiplying the (unknown, defaulted-to-1)
    prefactor in both failure probabilities.
    """

    part_i_allowance: float
    part_ii_allowance: float
    failure_exponent: float
    prefactor_default: float = 1.0


def increment_thresholds(params: PercolationParams, n: int, y: float) -> IncrementThresholds:
    params.require_projection_regime()
    if n < 0:
        raise ValueError("level n must be >= 0")
    if y < 0:
        raise ValueError("density value y must be >= 0")
    pk = params.pk()
    pkn = (params.p * params.k) ** n
    part_i = (pkn**-1.0) * (pkn * y) ** (2.0 / 3.0)
    gamma = concentration_base(params.p)
    return IncrementThresholds(
        part_i_allowance=part_i,
        part_ii_allowance=pk ** (-n / 6.0),
        failure_exponent=gamma ** (pk ** (n / 3.0)),
    )


@dataclass(frozen=True)
class TailFailureSum:
    """Truncated sum over m >= N of k^(m-N) gamma^((pk)^(m/3))."""

    value: float
    terms: int
    monotone_from: int  # first m with strictly decreasing terms
    half_ratio_from: int  # first m with term(m+1)/term(m) < 1/2


def tail_failure_sum(params: PercolationParams, big_n: int, epsilon: float = 1e-12) -> TailFailureSum:
    """Tail of the per-interval failure bounds from level `big_n` on.

    Early terms may grow (k^m beats the double exponential at small m); the
    sum proceeds until decay is monotone, then truncates once a term drops
    below epsilon times the running partial sum.
    """
    params.require_projection_regime()
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pk = params.pk()
    log_gamma = math.log(concentration_base(params.p))
    log_k = math.log(params.k)

    def log_term(m: int) -> float:
        return (m - big_n) * log_k + (pk ** (m / 3.0)) * log_gamma

    total = 0.0
    prev: float | None = None
    monotone_from = -1
    half_from = -1
    m = big_n
    while True:
        lt = log_term(m)
        term = math.exp(lt) if lt > -745.0 else 0.0
        total += term
        if prev is None and term == 0.0:
            # first term already underflowed; the ratio only shrinks from here
            return TailFailureSum(total, 1, big_n, big_n)
        if prev is not None:
            if monotone_from < 0 and term < prev:
                monotone_from = m
            if half_from < 0 and prev > 0 and term < 0.5 * prev:
                half_from = m
            if monotone_from >= 0 and term < prev and (
                term <= epsilon * total or term == 0.0
            ):
                return TailFailureSum(total, m - big_n + 1, monotone_from, half_from)
        if m - big_n > 100_000:
            raise ArithmeticError("tail sum did not converge within 1e5 terms")
        prev = term
        m += 1


@dataclass(frozen=True)
class EnvelopeProbability:
    """Lower bound for the chance that the level-n density sits below the
    (pk)^(n/4) envelope; raw value may be negative (vacuous) at small n."""

    raw: float
    clamped: float
    vacuous: bool


def envelope_probability(params: PercolationParams, n: int) -> EnvelopeProbability:
    params.require_projection_regime()
    if n < 1:
        raise ValueError("level n must be >= 1")
    pk = params.pk()
    log_gamma = math.log(concentration_base(params.p))
    l_value = envelope_factor(params)
    m_lo = math.ceil(n / l_value)
    s = 0.0
    for m in range(m_lo, n + 1):
        e = (pk ** (m / 3.0)) * log_gamma
        s += math.exp(e) if e > -745.0 else 0.0
    raw = 1.0 - s
    return EnvelopeProbability(raw=raw, clamped=max(0.0, raw), vacuous=raw < 0.0)


@dataclass(frozen=True)
class GridSpec:
    """Mesh and cardinality bound for the angle/position verification grids."""

    mesh: float
    cardinality_bound: float


def grid_mesh(params: PercolationParams, n: int, delta: float) -> GridSpec:
    """Grid mesh delta * p^(5n/6) * k^(-7n/6) (prefactor defaulted to 1) and
    the matching cardinality bound delta^-1 p^(-5n/6) k^(7n/6)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n < 0:
        raise ValueError("level n must be >= 0")
    mesh = delta * params.p ** (5.0 * n / 6.0) * float(params.k) ** (-7.0 * n / 6.0)
    card = (1.0 / delta) * params.p ** (-5.0 * n / 6.0) * float(params.k) ** (7.0 * n / 6.0)
    return GridSpec(mesh=mesh, cardinality_bound=card)


@dataclass(frozen=True)
class DepthRelation:
    """Largest grid level n usable for interval length k^-N, with the linear
    rearrangement n <= l_prime * N - l_double_prime reported explicitly."""

    n: int
    l_prime: float
    l_double_prime: float


def depth_relation(params: PercolationParams, big_n: int, delta: float) -> DepthRelation:
    """Largest n with N > 7n/6 + (5n/6) log_k(1/p) + log_k(1/delta)
    (prefactor defaulted to 1).  The returned n satisfies the strict
    inequality and n+1 violates it."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    log_k = math.log(params.k)
    coef = 7.0 / 6.0 + (5.0 / 6.0) * math.log(1.0 / params.p) / log_k
    base = math.log(1.0 / delta) / log_k

    def satisfies(n: int) -> bool:
        return big_n > coef * n + base

    n = math.floor((big_n - base) / coef)
    while n >= 0 and not satisfies(n):
        n -= 1
    if n < 0:
        raise ValueError(f"no level satisfies the mesh-depth relation at N={big_n}, delta={delta}")
    if satisfies(n + 1):
        raise ArithmeticError("depth relation maximality violated; numeric anomaly")
    return DepthRelation(n=n, l_prime=1.0 / coef, l_double_prime=base / coef)


@dataclass(frozen=True)
class GridUnionFailure:
    """Failure-probability bound for the full grid union at level n: the
    polynomially large grid-cardinality prefactor times the residual
    double-exponential tail.  Typically vacuous (>= 1) at desk-scale n, so
    it is reported but never used as an empirical gate."""

    prefactor: float
    tail: float
    product: float
    vacuous: bool


def grid_union_failure(params: PercolationParams, n: int, delta: float) -> GridUnionFailure:
    params.require_projection_regime()
    if delta <= 0:
        raise ValueError("delta must be positive")
    pk = params.pk()
    log_gamma = math.log(concentration_base(params.p))
    tail = 0.0
    m = n
    while True:
        e = (pk ** (m / 3.0)) * log_gamma
        term = math.exp(e) if e > -745.0 else 0.0
        tail += term
        if term == 0.0 or (m > n and term < 1e-15 * tail):
            break
        m += 1
        if m - n > 100_000:
            raise ArithmeticError("grid union tail did not converge")
    prefactor = delta**-2.0 * params.p ** (-5.0 * n / 3.0) * float(params.k) ** (7.0 * n / 3.0)
    product = prefactor * tail
    return GridUnionFailure(prefactor=prefactor, tail=tail, product=product, vacuous=product >= 1.0)


def constants_report(
    k: int,
    p: float,
    delta: float = 0.1,
    n: int = 6,
    big_n: int = 20,
) -> dict:
    """All closed-form constants for (k, p, delta) as a JSON-ready dict."""
    from .percolation import dim_theory

    params = PercolationParams(k=k, p=p)
    out: dict = {"params": params.describe(), "prefactor_default": 1.0}
    out["gamma"] = concentration_base(p)
    if params.supercritical_branching:
        out["dim_theory"] = dim_theory(params)
    else:
        out["dim_theory"] = None
    if params.projection_regime:
        n0 = taming_depth(params)
        lv = envelope_factor(params)
        thresholds = increment_thresholds(params, n, y=1.0)
        tail = tail_failure_sum(params, max(big_n, n0))
        env = envelope_probability(params, max(n, 1))
        rel = depth_relation(params, big_n, delta)
        grid = grid_mesh(params, n, delta)
        union = grid_union_failure(params, n, delta)
        out.update(
            {
                "taming_depth": n0,
                "envelope_factor": lv,
                "increment_thresholds": {
                    "level": n,
                    "part_i_allowance_at_y1": thresholds.part_i_allowance,
                    "part_ii_allowance": thresholds.part_ii_allowance,
                    "failure_exponent": thresholds.failure_exponent,
                },
                "tail_failure_sum": {
                    "from_level": max(big_n, n0),
                    "value": tail.value,
                    "terms": tail.terms,
                },
                "envelope_probability": {
                    "level": max(n, 1),
                    "raw": env.raw,
                    "clamped": env.clamped,
                    "vacuous": env.vacuous,
                },
                "grid": {
                    "level": n,
                    "delta": delta,
                    "mesh": grid.mesh,
                    "cardinality_bound": grid.cardinality_bound,
                },
                "depth_relation": {
                    "big_n": big_n,
                    "delta": delta,
                    "n": rel.n,
                    "l_prime": rel.l_prime,
                    "l_double_prime": rel.l_double_prime,
                },
                "grid_union_failure": {
                    "level": n,
                    "delta": delta,
                    "prefactor": union.prefactor,
                    "tail": union.tail,
                    "product": union.product,
                    "vacuous": union.vacuous,
                },
            }
        )
    else:
        out["regime_warning"] = f"kp = {k * p:.6g} <= 1: projection-regime constants undefined"
    return out
