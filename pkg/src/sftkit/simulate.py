"""Generative ground truth: trials with known architecture, stopping rule,
and (optionally violated) selective influence.

Channel durations are gamma distributed (Poisson-counter criterion k); the
coactive composition pools the two rates into a single gamma counter.  An
optional shared noise term added to both channels realizes a common source,
which preserves selective influence by construction.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .trials import Channels, TrajectorySample, TrialRecord, TrialSet

_MIN_DURATION_MS = 1e-3


class Architecture(enum.Enum):
    SERIAL_OR = "serial-or"
    SERIAL_AND = "serial-and"
    PARALLEL_OR = "parallel-or"
    PARALLEL_AND = "parallel-and"
    COACTIVE = "coactive"


@dataclass(frozen=True)
class ArchitectureModel:
    architecture: Architecture
    channel_shape: int = 2
    rate_alpha: dict = field(default_factory=lambda: {1: 1 / 200.0, 2: 1 / 100.0})
    rate_beta: dict = field(default_factory=lambda: {1: 1 / 200.0, 2: 1 / 100.0})
    serial_or_p: float = 0.5
    base_ms: float = 0.0
    si_violation: float = 0.0
    shared_sd: float = 0.0

    def __post_init__(self):
        if self.channel_shape < 1:
            raise ValueError("channel_shape must be a positive integer")
        for rates in (self.rate_alpha, self.rate_beta):
            if set(rates) != {1, 2} or min(rates.values()) <= 0:
                raise ValueError("rate maps need positive rates for levels 1 and 2")
            if rates[1] >= rates[2]:
                raise ValueError("level 1 must be slower (rate[1] < rate[2])")
        if not 0.0 <= self.serial_or_p <= 1.0:
            raise ValueError("serial_or_p must lie in [0, 1]")
        if self.base_ms < 0 or self.si_violation < 0 or self.shared_sd < 0:
            raise ValueError("base_ms, si_violation, shared_sd must be nonnegative")


@dataclass(frozen=True)
class ResponseModel:
    """Final responses are unbiased matches of the factor values plus noise;
    violation_shift moves the A-mean when beta is at level 2 (and the B-mean
    when alpha is at level 2), breaking marginal selectivity."""

    noise_sd: float = 8.0
    violation_shift: float = 0.0

    def __post_init__(self):
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")


@dataclass(frozen=True)
class DesignSpec:
    alpha_range: tuple[float, float] = (20.0, 80.0)
    beta_range: tuple[float, float] = (20.0, 80.0)
    split_alpha: float = 50.0
    split_beta: float = 50.0
    n_trials: int = 1000
    single_channel_fraction: float = 0.0
    sample_every_ms: float = 10.0

    def __post_init__(self):
        for lo, hi in (self.alpha_range, self.beta_range):
            if not lo < hi:
                raise ValueError("factor range must be increasing")
        if not self.alpha_range[0] <= self.split_alpha <= self.alpha_range[1]:
            raise ValueError("split_alpha outside factor range")
        if not self.beta_range[0] <= self.split_beta <= self.beta_range[1]:
            raise ValueError("split_beta outside factor range")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if not 0.0 <= self.single_channel_fraction <= 1.0:
            raise ValueError("single_channel_fraction must lie in [0, 1]")
        if self.sample_every_ms <= 0:
            raise ValueError("sample_every_ms must be positive")


@dataclass(frozen=True)
class ChannelWindow:
    """Active interval of one response coordinate with its endpoint values."""

    start_ms: float
    end_ms: float
    start_value: float
    end_value: float


def synthesize_trajectory(window_a: ChannelWindow | None, window_b: ChannelWindow | None,
                          rt_ms: float, sample_every_ms: float = 10.0,
                          rest_a: float = 0.0, rest_b: float = 0.0):
    """Piecewise-linear trajectory sampled on a nominal grid.

    Each coordinate moves linearly from its start value to its end value
    inside its window and is constant outside.  Window boundaries and the
    trial end are inserted into the sample grid so that no sample interval
    straddles a channel handoff.
    """
    times = set(np.arange(0.0, rt_ms, sample_every_ms).tolist())
    times.add(rt_ms)
    for w in (window_a, window_b):
        if w is not None:
            if not (0.0 <= w.start_ms <= w.end_ms <= rt_ms):
                raise ValueError("channel window outside [0, rt]")
            times.add(w.start_ms)
            times.add(w.end_ms)
    grid = sorted(times)

    def _value(w: ChannelWindow | None, rest: float, t: float) -> float:
        if w is None:
            return rest
        if t <= w.start_ms:
            return w.start_value
        if t >= w.end_ms:
            return w.end_value
        frac = (t - w.start_ms) / (w.end_ms - w.start_ms)
        return w.start_value + frac * (w.end_value - w.start_value)

    return tuple(TrajectorySample(t, _value(window_a, rest_a, t), _value(window_b, rest_b, t))
                 for t in grid)


def _factor_level(value: np.ndarray, split: float) -> np.ndarray:
    # level 1 is the below-split interval; rate maps make it the slower one
    return np.where(value < split, 1, 2)


def simulate_dataset(model: ArchitectureModel, response: ResponseModel,
                     design: DesignSpec, seed: int,
                     include_trajectories: bool = True,
                     experiment_id: str = "sim", subject_id: str = "sim") -> TrialSet:
    """Draw a full trial set under the given architecture.

    Factors are uniform over the design ranges; single-channel trials set the
    absent factor to the 0 sentinel.  Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    n = design.n_trials
    k = model.channel_shape

    u = rng.random(n)
    f = design.single_channel_fraction
    kind = np.full(n, 0)  # 0 double, 1 single-alpha, 2 single-beta
    kind[u >= 1.0 - f] = 1
    kind[u >= 1.0 - f / 2.0] = 2

    alpha = rng.uniform(*design.alpha_range, n)
    beta = rng.uniform(*design.beta_range, n)
    alpha[kind == 2] = 0.0
    beta[kind == 1] = 0.0

    lv_a = _factor_level(alpha, design.split_alpha)
    lv_b = _factor_level(beta, design.split_beta)
    has_a = kind != 2
    has_b = kind != 1
    double = kind == 0

    rate_a = np.where(lv_a == 1, model.rate_alpha[1], model.rate_alpha[2])
    rate_b = np.where(lv_b == 1, model.rate_beta[1], model.rate_beta[2])
    if model.si_violation > 0:
        rate_a = np.where(double & (lv_b == 2), rate_a * (1 + model.si_violation), rate_a)
        rate_b = np.where(double & (lv_a == 2), rate_b * (1 + model.si_violation), rate_b)

    t_a = rng.gamma(k, 1.0 / rate_a)
    t_b = rng.gamma(k, 1.0 / rate_b)
    t_co = rng.gamma(k, 1.0 / (rate_a + rate_b))
    pick_alpha = rng.random(n) < model.serial_or_p
    shared = rng.normal(0.0, model.shared_sd, n) if model.shared_sd > 0 else np.zeros(n)
    d_a = np.maximum(t_a + shared, _MIN_DURATION_MS)
    d_b = np.maximum(t_b + shared, _MIN_DURATION_MS)
    d_co = np.maximum(t_co + shared, _MIN_DURATION_MS)

    arch = model.architecture
    if arch is Architecture.SERIAL_OR:
        dur = np.where(pick_alpha, d_a, d_b)
    elif arch is Architecture.SERIAL_AND:
        dur = d_a + d_b
    elif arch is Architecture.PARALLEL_OR:
        dur = np.minimum(d_a, d_b)
    elif arch is Architecture.PARALLEL_AND:
        dur = np.maximum(d_a, d_b)
    else:
        dur = d_co
    # single-channel trials load one channel only
    dur = np.where(kind == 1, d_a, dur)
    dur = np.where(kind == 2, d_b, dur)
    rt = model.base_ms + dur

    a_mean = alpha + np.where(double & (lv_b == 2), response.violation_shift, 0.0)
    b_mean = beta + np.where(double & (lv_a == 2), response.violation_shift, 0.0)
    a_final = np.where(has_a, rng.normal(a_mean, response.noise_sd), 0.0)
    b_final = np.where(has_b, rng.normal(b_mean, response.noise_sd), 0.0)

    channel_enum = {0: Channels.DOUBLE, 1: Channels.SINGLE_ALPHA, 2: Channels.SINGLE_BETA}
    records = []
    for i in range(n):
        trajectory = None
        if include_trajectories:
            trajectory = _trial_trajectory(
                arch, float(model.base_ms), float(rt[i]), float(d_a[i]), float(d_b[i]),
                bool(pick_alpha[i]), kind[i], float(a_final[i]), float(b_final[i]),
                design.sample_every_ms)
        records.append(TrialRecord(
            experiment_id=experiment_id,
            subject_id=subject_id,
            trial_index=i,
            alpha=float(alpha[i]),
            beta=float(beta[i]),
            a_final=float(a_final[i]),
            b_final=float(b_final[i]),
            rt_ms=float(rt[i]),
            channels=channel_enum[int(kind[i])],
            trajectory=trajectory,
        ))
    provenance = {
        "generator": "simulate_dataset",
        "architecture": arch.value,
        "seed": seed,
        "n_trials": n,
        "single_channel_fraction": f,
        "si_violation": model.si_violation,
        "violation_shift": response.violation_shift,
    }
    return TrialSet(tuple(records), provenance)


def _trial_trajectory(arch, base, rt, d_a, d_b, pick_alpha, kind, a_target, b_target,
                      sample_every_ms):
    """Channel windows implied by the architecture, then linear segments.

    OR compositions truncate the losing channel at the trial end, so its
    coordinate covers only the elapsed fraction of its path.
    """
    win_a = win_b = None
    if kind == 1:
        win_a = ChannelWindow(base, rt, 0.0, a_target)
    elif kind == 2:
        win_b = ChannelWindow(base, rt, 0.0, b_target)
    elif arch is Architecture.SERIAL_AND:
        win_a = ChannelWindow(base, base + d_a, 0.0, a_target)
        win_b = ChannelWindow(base + d_a, rt, 0.0, b_target)
    elif arch is Architecture.SERIAL_OR:
        if pick_alpha:
            win_a = ChannelWindow(base, rt, 0.0, a_target)
        else:
            win_b = ChannelWindow(base, rt, 0.0, b_target)
    elif arch is Architecture.PARALLEL_AND:
        win_a = ChannelWindow(base, base + d_a, 0.0, a_target)
        win_b = ChannelWindow(base, base + d_b, 0.0, b_target)
    elif arch is Architecture.PARALLEL_OR:
        frac_a = min(1.0, (rt - base) / d_a)
        frac_b = min(1.0, (rt - base) / d_b)
        win_a = ChannelWindow(base, rt, 0.0, frac_a * a_target)
        win_b = ChannelWindow(base, rt, 0.0, frac_b * b_target)
    else:  # coactive: pooled evidence drives both coordinates together
        win_a = ChannelWindow(base, rt, 0.0, a_target)
        win_b = ChannelWindow(base, rt, 0.0, b_target)
    return synthesize_trajectory(win_a, win_b, rt, sample_every_ms)
