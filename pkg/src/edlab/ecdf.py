"""Empirical distribution functions and the two-sample Kolmogorov-Smirnov distance."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EmpiricalCDF:
    values: np.ndarray
    seeds: tuple = field(default=(), compare=False)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return int(self.values.size)

    def __call__(self, z):
        """``#{samples <= z} / count``."""
        if self.count == 0:
            raise ValueError("empty empirical CDF")
        return np.searchsorted(self.values, z, side="right") / self.count

    def quantiles(self, n: int = 512) -> np.ndarray:
        q = (np.arange(n) + 0.5) / n
        return np.quantile(self.values, q)

    def reflect(self) -> "EmpiricalCDF":
        return EmpiricalCDF(-self.values, self.seeds)


def ks_distance(F: EmpiricalCDF, G: EmpiricalCDF) -> float:
    """``sup_z |F(z) - G(z)|``; the sup is attained on the merged sample grid."""
    if F.count == 0 or G.count == 0:
        raise ValueError("KS distance needs nonempty samples")
    grid = np.concatenate([F.values, G.values])
    return float(np.max(np.abs(F(grid) - G(grid))))


def dkw_bound(n: int, alpha: float = 0.01) -> float:
    """Dvoretzky-Kiefer-Wolfowitz radius: ``P(sup|F_n - F| > t) <= alpha``."""
    return float(np.sqrt(np.log(2.0 / alpha) / (2.0 * n)))
