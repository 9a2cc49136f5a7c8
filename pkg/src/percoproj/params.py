"""Construction parameters (k, p) and derived regime facts."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RegimeError


@dataclass(frozen=True)
class PercolationParams:
    """Subdivision base k >= 2 and per-cell survival probability p in (0,1).

    Regime flags are derived, never stored: `supercritical_branching`
    (k^2 p > 1, positive survival probability) and `projection_regime`
    (k p > 1, the standing assumption for the projection statements).
    """

    k: int
    p: float

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie strictly in (0,1), got {self.p!r}")

    @property
    def branching_mean(self) -> float:
        """Mean offspring count k^2 p of the cell branching process."""
        return self.k * self.k * self.p

    @property
    def supercritical_branching(self) -> bool:
        return self.branching_mean > 1.0

    @property
    def projection_regime(self) -> bool:
        return self.k * self.p > 1.0

    def require_projection_regime(self) -> None:
        if not self.projection_regime:
            raise RegimeError(
                f"kp = {self.k * self.p:.6g} <= 1; projection statements require kp > 1"
            )

    def require_supercritical(self) -> None:
        if not self.supercritical_branching:
            raise RegimeError(
                f"k^2 p = {self.branching_mean:.6g} <= 1; realization dies out almost surely"
            )

    def pk(self) -> float:
        return self.k * self.p

    def scale(self, level: int) -> float:
        """Side length k^-level of a level cell."""
        return float(self.k) ** (-level)

    def weight(self, level: int) -> float:
        """Normalization p^-level applied to level-`level` densities."""
        return self.p ** (-level)

    def describe(self) -> dict:
        return {
            "k": self.k,
            "p": self.p,
            "branching_mean": self.branching_mean,
            "supercritical_branching": self.supercritical_branching,
            "projection_regime": self.projection_regime,
            "log_pk": math.log(self.k * self.p) if self.k * self.p > 0 else None,
        }
