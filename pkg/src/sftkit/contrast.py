"""Stochastic dominance, survivor/mean interaction contrasts, permutation
significance, and architecture classification.

The four salience conditions are keyed a1b1, a1b2, a2b1, a2b2 with level 1
the slower-processed interval.  All statistics are computed on the merged
sorted sample grid, which is exact for empirical step functions.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace

import numba as nb
import numpy as np

# environment noise from the parallel-backend probe; the fallback layer works
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

from .curves import KsResult, Sided, ks_two_sample
from .trials import DOUBLE_CONDITIONS

# Inequalities asserted by stochastic dominance: S_x(t) >= S_y(t).
DOMINANCE_PAIRS = (("a1b1", "a2b1"), ("a1b2", "a2b2"), ("a1b1", "a1b2"), ("a2b1", "a2b2"))


@dataclass(frozen=True)
class ConditionRts:
    """RT samples (ms) for the four double-channel salience conditions."""

    a1b1: np.ndarray
    a1b2: np.ndarray
    a2b1: np.ndarray
    a2b2: np.ndarray

    def __post_init__(self):
        for cond in DOUBLE_CONDITIONS:
            x = np.asarray(getattr(self, cond), dtype=float)
            object.__setattr__(self, cond, x)
            if x.size == 0:
                raise ValueError(f"empty RT sample for {cond}")
            if not np.all(x > 0):
                raise ValueError(f"nonpositive RT in {cond}")

    def __getitem__(self, cond: str) -> np.ndarray:
        return getattr(self, cond)

    @classmethod
    def from_partition(cls, rt_samples: dict[str, np.ndarray]) -> "ConditionRts":
        return cls(*(rt_samples[c] for c in DOUBLE_CONDITIONS))


@dataclass(frozen=True)
class SicProfile:
    grid: np.ndarray
    sic: np.ndarray
    mic: float
    d_plus: float
    d_minus: float
    p_d_plus: float | None = None
    p_d_minus: float | None = None
    p_mic: float | None = None


@dataclass(frozen=True)
class DominanceReport:
    """Forward (ordering-evidence) and reverse (violation-evidence) one-tailed
    KS results for each survival inequality; passes when every reverse
    p-value exceeds alpha_sig / 4."""

    tests: dict[str, dict[str, KsResult]]
    alpha_sig: float
    passed: bool


class ArchitectureLabel(enum.Enum):
    SERIAL_OR = "SerialOR"
    SERIAL_AND = "SerialAND"
    PARALLEL_OR = "ParallelOR"
    PARALLEL_AND = "ParallelAND"
    COACTIVE = "Coactive"
    UNCERTAIN = "Uncertain"
    UNDIAGNOSTIC = "Undiagnostic"


@dataclass(frozen=True)
class ArchitectureCall:
    label: ArchitectureLabel
    sig_d_plus: bool
    sig_d_minus: bool
    sig_mic: bool
    mic_sign: int
    note: str = ""


def dominance_battery(rts: ConditionRts, alpha_sig: float = 0.05) -> DominanceReport:
    """Paired one-tailed KS tests for the four survival orderings.

    For each asserted S_x >= S_y, the forward test measures evidence of the
    ordering and the reverse test measures evidence of a violation.
    """
    tests = {}
    ok = True
    for x_cond, y_cond in DOMINANCE_PAIRS:
        x, y = rts[x_cond], rts[y_cond]
        forward = ks_two_sample(x, y, Sided.GREATER_FIRST)
        reverse = ks_two_sample(x, y, Sided.GREATER_SECOND)
        tests[f"{x_cond}>={y_cond}"] = {"forward": forward, "reverse": reverse}
        ok = ok and reverse.p_value > alpha_sig / 4.0
    return DominanceReport(tests, alpha_sig, ok)


def _survivals_on_grid(rts: ConditionRts) -> tuple[np.ndarray, np.ndarray]:
    grid = np.unique(np.concatenate([rts[c] for c in DOUBLE_CONDITIONS]))
    surv = np.empty((4, grid.size))
    for k, cond in enumerate(DOUBLE_CONDITIONS):
        x = np.sort(rts[cond])
        surv[k] = 1.0 - np.searchsorted(x, grid, side="right") / x.size
    return grid, surv


def sic_mic(rts: ConditionRts) -> SicProfile:
    """Survivor and mean interaction contrasts on the merged sample grid."""
    grid, surv = _survivals_on_grid(rts)
    sic = surv[0] - surv[1] - surv[2] + surv[3]
    mic = (float(np.mean(rts["a1b1"])) - float(np.mean(rts["a1b2"]))
           - float(np.mean(rts["a2b1"])) + float(np.mean(rts["a2b2"])))
    d_plus = max(0.0, float(np.max(sic)))
    d_minus = max(0.0, -float(np.min(sic)))
    return SicProfile(grid, sic, mic, d_plus, d_minus)


def sic_area(profile: SicProfile) -> float:
    """Riemann sum of SIC over the grid (right-continuous steps).

    SIC vanishes before the first grid point (all survivals 1) and after the
    last (all survivals 0), so the sum over grid intervals is the exact
    integral, which equals MIC up to rounding.
    """
    if profile.grid.size < 2:
        return 0.0
    return float(np.dot(profile.sic[:-1], np.diff(profile.grid)))


@nb.njit(nb.uint64(nb.uint64), inline="always", cache=True)
def _mix64(z):
    z = (z ^ (z >> nb.uint64(30))) * nb.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> nb.uint64(27))) * nb.uint64(0x94D049BB133111EB)
    return z ^ (z >> nb.uint64(31))


@nb.njit(cache=True, parallel=True)
def _permutation_null(sorted_vals, eval_mask, n11, n12, n21, n22, n_perm, seed):
    """Null distributions of (D+, D-, MIC) under label permutation.

    Labels are drawn sequentially without replacement over the sorted pooled
    sample (equivalent to a uniform random label permutation), which lets the
    survival contrast be accumulated in the same pass.  Each permutation has
    its own counter-derived random stream, so results do not depend on thread
    count or scheduling.
    """
    n_total = n11 + n12 + n21 + n22
    d_plus = np.empty(n_perm)
    d_minus = np.empty(n_perm)
    mic = np.empty(n_perm)
    golden = nb.uint64(0x9E3779B97F4A7C15)
    inv53 = 1.0 / 9007199254740992.0
    # SIC = S11 - S12 - S21 + S22 = F12 + F21 - F11 - F22, so drawing one
    # element for a group moves the running SIC by -1/n11, +1/n12, +1/n21,
    # or -1/n22 respectively.
    inv0 = 1.0 / n11
    inv1 = 1.0 / n12
    inv2 = 1.0 / n21
    inv3 = 1.0 / n22
    for p in nb.prange(n_perm):
        state = _mix64(nb.uint64(seed) ^ (nb.uint64(p) + nb.uint64(1)) * golden)
        c0 = float(n11)
        c1 = float(n12)
        c2 = float(n21)
        c3 = float(n22)
        rem = float(n_total)
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        sic = 0.0
        hi = 0.0
        lo = 0.0
        for k in range(n_total):
            state = state + golden
            z = _mix64(state)
            u = (z >> nb.uint64(11)) * inv53
            r = u * rem
            if r < c0:
                c0 -= 1.0
                s0 += sorted_vals[k]
                sic -= inv0
            else:
                r -= c0
                if r < c1:
                    c1 -= 1.0
                    s1 += sorted_vals[k]
                    sic += inv1
                else:
                    r -= c1
                    if r < c2:
                        c2 -= 1.0
                        s2 += sorted_vals[k]
                        sic += inv2
                    else:
                        c3 -= 1.0
                        s3 += sorted_vals[k]
                        sic -= inv3
            rem -= 1.0
            if eval_mask[k]:
                if sic > hi:
                    hi = sic
                elif sic < lo:
                    lo = sic
        d_plus[p] = hi
        d_minus[p] = -lo
        mic[p] = s0 * inv0 - s1 * inv1 - s2 * inv2 + s3 * inv3
    return d_plus, d_minus, mic


def permutation_significance(rts: ConditionRts, n_perm: int = 10000,
                             seed: int = 0) -> SicProfile:
    """Permutation p-values for D+, D-, and MIC.

    All RTs are pooled; each permutation redraws four groups of the original
    sizes without replacement.  p(D+) and p(D-) are the fractions of permuted
    statistics at or above the observed ones; p(MIC) is two-sided on |MIC|.
    Deterministic given the seed.
    """
    if n_perm < 100:
        raise ValueError("n_perm must be at least 100")
    profile = sic_mic(rts)
    pooled = np.concatenate([rts[c] for c in DOUBLE_CONDITIONS])
    order = np.argsort(pooled, kind="stable")
    sorted_vals = pooled[order]
    eval_mask = np.empty(sorted_vals.size, dtype=np.bool_)
    eval_mask[:-1] = sorted_vals[1:] > sorted_vals[:-1]
    eval_mask[-1] = True
    sizes = [rts[c].size for c in DOUBLE_CONDITIONS]
    d_plus, d_minus, mic = _permutation_null(
        sorted_vals, eval_mask, sizes[0], sizes[1], sizes[2], sizes[3],
        n_perm, np.uint64(seed))
    return replace(
        profile,
        p_d_plus=float(np.mean(d_plus >= profile.d_plus)),
        p_d_minus=float(np.mean(d_minus >= profile.d_minus)),
        p_mic=float(np.mean(np.abs(mic) >= abs(profile.mic))),
    )


def classify_architecture(profile: SicProfile, alpha_sft: float = 0.33) -> ArchitectureCall:
    """Map the significance pattern of (D+, D-, MIC) to an architecture label.

    A flat SIC with zero MIC is indistinguishable from lack of power, so the
    all-insignificant pattern is reported as Undiagnostic with a note rather
    than as a serial-OR diagnosis.
    """
    if profile.p_d_plus is None or profile.p_d_minus is None or profile.p_mic is None:
        raise ValueError("profile has no p-values; run permutation_significance first")
    sp = profile.p_d_plus <= alpha_sft
    sm = profile.p_d_minus <= alpha_sft
    smic = profile.p_mic <= alpha_sft
    mic_sign = 0 if profile.mic == 0 else (1 if profile.mic > 0 else -1)

    if not sp and not sm and not smic:
        label, note = ArchitectureLabel.UNDIAGNOSTIC, (
            "flat SIC and zero MIC; consistent with serial OR or with lack of power")
    elif sm and not sp and smic and mic_sign < 0:
        label, note = ArchitectureLabel.PARALLEL_AND, ""
    elif sp and not sm and smic and mic_sign > 0:
        label, note = ArchitectureLabel.PARALLEL_OR, ""
    elif sp and sm and smic and mic_sign > 0:
        label, note = ArchitectureLabel.COACTIVE, ""
    elif sp and sm and not smic:
        label, note = ArchitectureLabel.UNCERTAIN, (
            "S-shaped SIC without significant MIC: serial AND vs underpowered coactive")
    else:
        label, note = ArchitectureLabel.UNCERTAIN, "significance pattern matches no signature"
    return ArchitectureCall(label, sp, sm, smic, mic_sign, note)


def sic_curve_csv(profile: SicProfile) -> str:
    lines = ["t_ms,sic"]
    for t, v in zip(profile.grid, profile.sic):
        lines.append(f"{float(t)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"
