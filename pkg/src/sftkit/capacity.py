"""Workload capacity coefficients from double- and single-channel trials.

C_AND compares log-CDFs (all-channels-finished benchmark); C_OR compares
Nelson-Aalen cumulative hazards (first-channel-finished benchmark).  Values
above 1 indicate super capacity, 1 unlimited, below 1 limited.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


class StoppingRule(enum.Enum):
    AND = "and"
    OR = "or"


class CapacityVerdict(enum.Enum):
    SUPER = "Super"
    UNLIMITED = "Unlimited"
    LIMITED = "Limited"
    MIXED = "Mixed"


@dataclass(frozen=True)
class CapacityInput:
    double_rts: np.ndarray
    single_alpha_rts: np.ndarray
    single_beta_rts: np.ndarray
    rule: StoppingRule

    def __post_init__(self):
        for name in ("double_rts", "single_alpha_rts", "single_beta_rts"):
            x = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, x)
            if x.size == 0:
                raise ValueError(f"empty sample: {name}")
            if not np.all(x > 0):
                raise ValueError(f"nonpositive RT in {name}")


@dataclass(frozen=True)
class CapacityCurve:
    grid: np.ndarray
    c: np.ndarray
    band_lo: np.ndarray | None = None
    band_hi: np.ndarray | None = None
    verdict: CapacityVerdict | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.c)):
            raise ValueError("capacity values must be finite")


def _cdf_at(sample: np.ndarray, grid: np.ndarray) -> np.ndarray:
    s = np.sort(sample)
    return np.searchsorted(s, grid, side="right") / s.size


def _cum_hazard_at(sample: np.ndarray, grid: np.ndarray) -> np.ndarray:
    s = np.sort(sample)
    uniq, counts = np.unique(s, return_counts=True)
    at_risk = s.size - np.concatenate(([0], np.cumsum(counts)[:-1]))
    hazard = np.cumsum(counts / at_risk)
    idx = np.searchsorted(uniq, grid, side="right") - 1
    return np.where(idx >= 0, hazard[np.clip(idx, 0, None)], 0.0)


def _and_values(double, single_a, single_b, grid):
    f_ab = _cdf_at(double, grid)
    f_a = _cdf_at(single_a, grid)
    f_b = _cdf_at(single_b, grid)
    valid = (f_ab > 0) & (f_ab < 1) & (f_a > 0) & (f_b > 0)
    c = np.full(grid.size, np.nan)
    v = valid
    c[v] = (np.log(f_a[v]) + np.log(f_b[v])) / np.log(f_ab[v])
    return c


def _or_values(double, single_a, single_b, grid):
    h_ab = _cum_hazard_at(double, grid)
    h_a = _cum_hazard_at(single_a, grid)
    h_b = _cum_hazard_at(single_b, grid)
    denom = h_a + h_b
    c = np.full(grid.size, np.nan)
    v = denom > 0
    c[v] = h_ab[v] / denom[v]
    return c


def _capacity(inp: CapacityInput) -> CapacityCurve:
    grid = np.unique(np.concatenate([inp.double_rts, inp.single_alpha_rts,
                                     inp.single_beta_rts]))
    fn = _and_values if inp.rule is StoppingRule.AND else _or_values
    c = fn(inp.double_rts, inp.single_alpha_rts, inp.single_beta_rts, grid)
    keep = np.isfinite(c)
    if not np.any(keep):
        raise ValueError("no common support")
    return CapacityCurve(grid[keep], c[keep])


def capacity_and(inp: CapacityInput) -> CapacityCurve:
    """C_AND(t) = (K_alpha + K_beta) / K_alphabeta with K = ln F, on grid
    points where all three CDFs are positive and the double CDF is below 1."""
    if inp.rule is not StoppingRule.AND:
        raise ValueError("input rule must be AND")
    return _capacity(inp)


def capacity_or(inp: CapacityInput) -> CapacityCurve:
    """C_OR(t) = H_alphabeta / (H_alpha + H_beta) with Nelson-Aalen hazards,
    on grid points where the denominator is positive."""
    if inp.rule is not StoppingRule.OR:
        raise ValueError("input rule must be OR")
    return _capacity(inp)


def capacity_verdict(inp: CapacityInput, n_boot: int = 2000, seed: int = 0,
                     level: float = 0.95, min_defined: int = 20) -> CapacityCurve:
    """Attach a bootstrap percentile band and a grid-fraction verdict.

    Each replicate resamples the three inputs with replacement (per-replicate
    seeded substreams) and re-evaluates the coefficient on the original grid.
    Verdict: Super if the lower band exceeds 1 on at least half of the
    evaluable grid, Limited if the upper band is below 1 on at least half,
    Unlimited if the band straddles 1 on at least half, otherwise Mixed.
    """
    curve = _capacity(inp)
    fn = _and_values if inp.rule is StoppingRule.AND else _or_values
    grid = curve.grid
    boots = np.full((n_boot, grid.size), np.nan)
    for b in range(n_boot):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))
        d = rng.choice(inp.double_rts, inp.double_rts.size, replace=True)
        sa = rng.choice(inp.single_alpha_rts, inp.single_alpha_rts.size, replace=True)
        sb = rng.choice(inp.single_beta_rts, inp.single_beta_rts.size, replace=True)
        boots[b] = fn(d, sa, sb, grid)

    n_def = np.sum(np.isfinite(boots), axis=0)
    tail = (1.0 - level) / 2.0
    with np.errstate(all="ignore"):
        lo = np.nanquantile(boots, tail, axis=0)
        hi = np.nanquantile(boots, 1.0 - tail, axis=0)
    defined = n_def >= min_defined
    # percentile bands nearly always contain the point estimate; force the
    # declared bracketing invariant at the boundary
    lo = np.where(defined, np.minimum(lo, curve.c), np.nan)
    hi = np.where(defined, np.maximum(hi, curve.c), np.nan)

    if not np.any(defined):
        verdict = CapacityVerdict.MIXED
    else:
        lo_d, hi_d = lo[defined], hi[defined]
        frac_super = float(np.mean(lo_d > 1.0))
        frac_limited = float(np.mean(hi_d < 1.0))
        frac_straddle = float(np.mean((lo_d <= 1.0) & (hi_d >= 1.0)))
        if frac_super >= 0.5:
            verdict = CapacityVerdict.SUPER
        elif frac_limited >= 0.5:
            verdict = CapacityVerdict.LIMITED
        elif frac_straddle >= 0.5:
            verdict = CapacityVerdict.UNLIMITED
        else:
            verdict = CapacityVerdict.MIXED
    return replace(curve, band_lo=lo, band_hi=hi, verdict=verdict)


def capacity_curve_csv(curve: CapacityCurve) -> str:
    lines = ["t_ms,c,lo,hi"]
    lo = curve.band_lo if curve.band_lo is not None else np.full(curve.grid.size, np.nan)
    hi = curve.band_hi if curve.band_hi is not None else np.full(curve.grid.size, np.nan)
    for t, c, l, h in zip(curve.grid, curve.c, lo, hi):
        lines.append(f"{float(t)!r},{float(c)!r},{float(l)!r},{float(h)!r}")
    return "\n".join(lines) + "\n"
