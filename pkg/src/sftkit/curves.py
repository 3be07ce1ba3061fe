"""Empirical distribution curves and two-sample Kolmogorov-Smirnov tests.

Everything here operates on raw one-dimensional samples (typically response
times in ms, or final response coordinates).  Curves are right-continuous
step functions represented on the sorted unique sample grid.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class CurveKind(enum.Enum):
    CDF = "cdf"
    SURVIVAL = "survival"
    CUM_HAZARD = "cum_hazard"
    LOG_CDF = "log_cdf"


class Sided(enum.Enum):
    TWO_SIDED = "two_sided"
    GREATER_FIRST = "greater_first"
    GREATER_SECOND = "greater_second"


@dataclass(frozen=True)
class EmpiricalCurve:
    """Right-continuous step function on a strictly increasing time grid."""

    grid: np.ndarray
    values: np.ndarray
    kind: CurveKind

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or values.shape != grid.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if grid.size == 0:
            raise ValueError("empty curve")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        diffs = np.diff(values)
        if self.kind is CurveKind.CDF:
            ok = np.all(diffs >= -1e-12) and values.min() >= -1e-12 and values.max() <= 1 + 1e-12
        elif self.kind is CurveKind.SURVIVAL:
            ok = np.all(diffs <= 1e-12) and values.min() >= -1e-12 and values.max() <= 1 + 1e-12
        elif self.kind is CurveKind.CUM_HAZARD:
            ok = np.all(diffs >= -1e-12) and values.min() >= -1e-12
        else:  # LOG_CDF
            ok = np.all(diffs >= -1e-12) and values.max() <= 1e-12
        if not ok:
            raise ValueError(f"values violate monotonicity/range for {self.kind}")

    def evaluate(self, t) -> np.ndarray:
        """Evaluate the step function at arbitrary times.

        Left of the first grid point the curve takes its kind's natural
        starting value (CDF 0, survival 1, cumulative hazard 0); the log-CDF
        is undefined there and evaluates to NaN.
        """
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.grid, t, side="right") - 1
        out = np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 0.0)
        if self.kind is CurveKind.SURVIVAL:
            out = np.where(idx >= 0, out, 1.0)
        elif self.kind is CurveKind.LOG_CDF:
            out = np.where(idx >= 0, out, np.nan)
        return out


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n1: int
    n2: int
    sided: Sided

    def __post_init__(self):
        if not (math.isfinite(self.statistic) and math.isfinite(self.p_value)):
            raise ValueError("KS statistic and p-value must be finite")
        if not 0.0 <= self.statistic <= 1.0:
            raise ValueError("statistic outside [0, 1]")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p-value outside [0, 1]")


def _clean_samples(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return x


def ecdf(samples) -> EmpiricalCurve:
    """Empirical CDF: value at each sorted unique point is P(X <= point)."""
    x = np.sort(_clean_samples(samples))
    grid, counts = np.unique(x, return_counts=True)
    values = np.cumsum(counts) / x.size
    return EmpiricalCurve(grid, values, CurveKind.CDF)


def survival(samples) -> EmpiricalCurve:
    """Empirical survival function S(t) = 1 - F(t) on the same grid."""
    f = ecdf(samples)
    return EmpiricalCurve(f.grid, 1.0 - f.values, CurveKind.SURVIVAL)


def nelson_aalen(samples) -> EmpiricalCurve:
    """Nelson-Aalen cumulative hazard: H(t) = sum over events <= t of d_i/n_i.

    d_i counts ties at event time t_i; n_i is the at-risk count just before
    t_i.  No censoring is supported.
    """
    x = np.sort(_clean_samples(samples))
    grid, counts = np.unique(x, return_counts=True)
    at_risk = x.size - np.concatenate(([0], np.cumsum(counts)[:-1]))
    values = np.cumsum(counts / at_risk)
    return EmpiricalCurve(grid, values, CurveKind.CUM_HAZARD)


def log_cdf(samples) -> EmpiricalCurve:
    """K(t) = ln F(t), defined only where F > 0 (true at every sample point)."""
    f = ecdf(samples)
    keep = f.values > 0
    return EmpiricalCurve(f.grid[keep], np.log(f.values[keep]), CurveKind.LOG_CDF)


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic two-sided KS survival function Q(lam) = 2 sum (-1)^(k-1) exp(-2 k^2 lam^2)."""
    if lam <= 0.05:
        # series converges too slowly; the limit is 1
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += -term if k % 2 == 0 else term
        if term < 1e-16:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(x, y, sided: Sided = Sided.TWO_SIDED) -> KsResult:
    """Two-sample KS test on raw samples.

    Statistics are sups of ECDF differences over the union grid (exact for
    step functions).  GREATER_FIRST is evidence that the first sample
    stochastically dominates (S_x >= S_y, i.e. F_y - F_x large); its p-value
    uses the one-sided asymptotic exp(-2 D^2 n1 n2 / (n1 + n2)).  The
    two-sided p-value uses the asymptotic Kolmogorov series.
    """
    xs = _clean_samples(x)
    ys = _clean_samples(y)
    n1, n2 = xs.size, ys.size
    grid = np.union1d(xs, ys)
    fx = ecdf(xs).evaluate(grid)
    fy = ecdf(ys).evaluate(grid)
    diff = fy - fx
    ne = n1 * n2 / (n1 + n2)
    if sided is Sided.TWO_SIDED:
        stat = float(np.max(np.abs(diff)))
        p = kolmogorov_sf(stat * math.sqrt(ne))
    else:
        signed = diff if sided is Sided.GREATER_FIRST else -diff
        stat = float(max(0.0, np.max(signed)))
        p = min(1.0, math.exp(-2.0 * stat * stat * ne))
    return KsResult(stat, p, n1, n2, sided)


def curve_to_csv(curve: EmpiricalCurve, header: tuple[str, str] = ("t_ms", "value")) -> str:
    """Two-column CSV rendering of a curve."""
    lines = [",".join(header)]
    for t, v in zip(curve.grid, curve.values):
        lines.append(f"{float(t)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"
