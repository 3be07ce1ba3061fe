"""Trial data model, JSON Lines / CSV ingestion and export, outlier filters,
and condition partitioning for double-factorial designs.

A trial records the two reference factors (alpha, beta), the two finalized
response values (a_final, b_final), the response time, which channels were
loaded (double vs single), and optionally the sampled response trajectory.
Single-channel trials carry the sentinel 0 for the absent factor and their
absent response value is ignored by all analyses.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class Channels(enum.Enum):
    DOUBLE = "double"
    SINGLE_ALPHA = "single_alpha"
    SINGLE_BETA = "single_beta"


class FileFormat(enum.Enum):
    JSON_LINES = "jsonl"
    CSV = "csv"


# Condition labels: a<level>b<level>, with 0 marking the absent channel.
DOUBLE_CONDITIONS = ("a1b1", "a1b2", "a2b1", "a2b2")
SINGLE_ALPHA_CONDITIONS = ("a1b0", "a2b0")
SINGLE_BETA_CONDITIONS = ("a0b1", "a0b2")
ALL_CONDITIONS = DOUBLE_CONDITIONS + SINGLE_BETA_CONDITIONS + SINGLE_ALPHA_CONDITIONS


@dataclass(frozen=True)
class TrajectorySample:
    t_ms: float
    a: float
    b: float


@dataclass(frozen=True)
class TrialRecord:
    experiment_id: str
    subject_id: str
    trial_index: int
    alpha: float
    beta: float
    a_final: float
    b_final: float
    rt_ms: float
    channels: Channels
    trajectory: tuple[TrajectorySample, ...] | None = None

    def __post_init__(self):
        if self.trial_index < 0:
            raise ValueError("trial_index must be nonnegative")
        if not (math.isfinite(self.rt_ms) and self.rt_ms > 0):
            raise ValueError("rt_ms must be a positive finite number")
        if self.channels is Channels.SINGLE_ALPHA and self.beta != 0:
            raise ValueError("single_alpha trials must carry beta = 0")
        if self.channels is Channels.SINGLE_BETA and self.alpha != 0:
            raise ValueError("single_beta trials must carry alpha = 0")
        if self.trajectory is not None:
            ts = [s.t_ms for s in self.trajectory]
            if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
                raise ValueError("trajectory timestamps must be strictly increasing")
            if ts and (ts[0] < 0 or ts[-1] > self.rt_ms):
                raise ValueError("trajectory timestamps must lie in [0, rt_ms]")


@dataclass(frozen=True)
class TrialSet:
    records: tuple[TrialRecord, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = {r.experiment_id for r in self.records}
        if len(ids) > 1:
            raise ValueError(f"records span multiple experiment_ids: {sorted(ids)}")

    def __len__(self):
        return len(self.records)

    def with_note(self, key: str, value) -> TrialSet:
        prov = dict(self.provenance)
        prov[key] = value
        return TrialSet(self.records, prov)


_REQUIRED_FIELDS = ("experiment_id", "subject_id", "trial_index", "alpha", "beta",
                    "a_final", "b_final", "rt_ms", "channels")


def _record_from_mapping(row: dict, row_no: int, allow_trajectory: bool) -> TrialRecord:
    for name in _REQUIRED_FIELDS:
        if name not in row or row[name] in (None, ""):
            raise ValueError(f"row {row_no}: missing required field '{name}'")

    def _num(name):
        try:
            return float(row[name])
        except (TypeError, ValueError):
            raise ValueError(f"row {row_no}: non-numeric field '{name}': {row[name]!r}") from None

    try:
        channels = Channels(str(row["channels"]))
    except ValueError:
        raise ValueError(f"row {row_no}: unknown channels value {row['channels']!r}") from None

    trajectory = None
    if allow_trajectory and row.get("trajectory") is not None:
        try:
            trajectory = tuple(
                TrajectorySample(float(s["t_ms"]), float(s["a"]), float(s["b"]))
                for s in row["trajectory"]
            )
        except (TypeError, KeyError, ValueError):
            raise ValueError(f"row {row_no}: malformed trajectory") from None

    try:
        return TrialRecord(
            experiment_id=str(row["experiment_id"]),
            subject_id=str(row["subject_id"]),
            trial_index=int(float(row["trial_index"])),
            alpha=_num("alpha"),
            beta=_num("beta"),
            a_final=_num("a_final"),
            b_final=_num("b_final"),
            rt_ms=_num("rt_ms"),
            channels=channels,
            trajectory=trajectory,
        )
    except ValueError as exc:
        raise ValueError(f"row {row_no}: {exc}") from None


def load_trials(path, fmt: FileFormat | None = None) -> TrialSet:
    """Load a trial file (JSON Lines or CSV; inferred from the suffix if fmt is None).

    Malformed rows raise ValueError naming the 1-based row number.  Unknown
    extra fields are ignored so extended exports remain loadable.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such trial file: {path}")
    if fmt is None:
        fmt = FileFormat.CSV if path.suffix.lower() == ".csv" else FileFormat.JSON_LINES

    records = []
    if fmt is FileFormat.JSON_LINES:
        with open(path, encoding="utf-8") as fh:
            for row_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError:
                    raise ValueError(f"row {row_no}: invalid JSON") from None
                records.append(_record_from_mapping(row, row_no, allow_trajectory=True))
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ValueError("CSV file has no header row")
            for row_no, row in enumerate(reader, start=2):  # header is line 1
                records.append(_record_from_mapping(row, row_no, allow_trajectory=False))

    return TrialSet(tuple(records), {"source": str(path), "format": fmt.value})


def _record_to_json(rec: TrialRecord) -> dict:
    out = {
        "experiment_id": rec.experiment_id,
        "subject_id": rec.subject_id,
        "trial_index": rec.trial_index,
        "alpha": rec.alpha,
        "beta": rec.beta,
        "a_final": rec.a_final,
        "b_final": rec.b_final,
        "rt_ms": rec.rt_ms,
        "channels": rec.channels.value,
    }
    if rec.trajectory is not None:
        out["trajectory"] = [{"t_ms": s.t_ms, "a": s.a, "b": s.b} for s in rec.trajectory]
    return out


def save_trials(trials: TrialSet, path, fmt: FileFormat | None = None) -> None:
    """Write trials in the JSON Lines schema (or the scalar-only CSV variant)."""
    path = Path(path)
    if fmt is None:
        fmt = FileFormat.CSV if path.suffix.lower() == ".csv" else FileFormat.JSON_LINES
    if fmt is FileFormat.JSON_LINES:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in trials.records:
                fh.write(json.dumps(_record_to_json(rec)) + "\n")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_REQUIRED_FIELDS)
            for rec in trials.records:
                writer.writerow([rec.experiment_id, rec.subject_id, rec.trial_index,
                                 repr(rec.alpha), repr(rec.beta), repr(rec.a_final),
                                 repr(rec.b_final), repr(rec.rt_ms), rec.channels.value])


def _sample_sd(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.size >= 2 else 0.0


def filter_response_outliers(trials: TrialSet, k: float = 3.0) -> TrialSet:
    """Drop trials whose response deviation (a_final - alpha or b_final - beta)
    lies more than k sample standard deviations from the deviation mean.

    Single-pass: means and sds come from the input set only.  Single-channel
    trials participate only through their present channel.  Zero spread in a
    deviation set removes nothing on that channel.
    """
    if not (math.isfinite(k) and k > 0):
        raise ValueError("k must be finite and positive")
    n_double = sum(r.channels is Channels.DOUBLE for r in trials.records)
    if n_double < 2:
        raise ValueError("need at least 2 double-channel trials")

    a_eligible = [r for r in trials.records if r.channels in (Channels.DOUBLE, Channels.SINGLE_ALPHA)]
    b_eligible = [r for r in trials.records if r.channels in (Channels.DOUBLE, Channels.SINGLE_BETA)]
    d_a = np.array([r.a_final - r.alpha for r in a_eligible])
    d_b = np.array([r.b_final - r.beta for r in b_eligible])
    mean_a, sd_a = float(np.mean(d_a)), _sample_sd(d_a)
    mean_b, sd_b = float(np.mean(d_b)), _sample_sd(d_b)

    def _bad(rec: TrialRecord) -> bool:
        if rec.channels in (Channels.DOUBLE, Channels.SINGLE_ALPHA) and sd_a > 0:
            if abs((rec.a_final - rec.alpha) - mean_a) > k * sd_a:
                return True
        if rec.channels in (Channels.DOUBLE, Channels.SINGLE_BETA) and sd_b > 0:
            if abs((rec.b_final - rec.beta) - mean_b) > k * sd_b:
                return True
        return False

    kept = tuple(r for r in trials.records if not _bad(r))
    out = TrialSet(kept, dict(trials.provenance))
    return out.with_note("response_outliers_removed", len(trials) - len(kept))


def filter_rt_outliers(trials: TrialSet, k: float = 5.0) -> TrialSet:
    """Drop trials whose RT lies more than k sample standard deviations from
    the mean RT of the whole set (single pass)."""
    if not (math.isfinite(k) and k > 0):
        raise ValueError("k must be finite and positive")
    if len(trials) < 2:
        raise ValueError("need at least 2 trials")
    rts = np.array([r.rt_ms for r in trials.records])
    mean, sd = float(np.mean(rts)), _sample_sd(rts)
    if sd == 0:
        kept = trials.records
    else:
        kept = tuple(r for r in trials.records if abs(r.rt_ms - mean) <= k * sd)
    out = TrialSet(kept, dict(trials.provenance))
    return out.with_note("rt_outliers_removed", len(trials) - len(kept))


def _factor_level(value: float, split: float, level1_is_low: bool) -> int:
    low = value < split
    return 1 if (low == level1_is_low) else 2


def partition_by_condition(trials: TrialSet, split_alpha: float, split_beta: float,
                           level1_is_low: tuple[bool, bool] = (True, True)) -> dict[str, TrialSet]:
    """Bin every trial into exactly one condition.

    Double-channel trials go to a<i>b<j> with i, j from (factor < split vs >=
    split) crossed with the level-direction flags; single-channel trials go to
    a<i>b0 / a0b<j> by their present factor's level.  Empty cells are allowed
    but noted in provenance.
    """
    lo_a, lo_b = level1_is_low
    buckets: dict[str, list[TrialRecord]] = {c: [] for c in ALL_CONDITIONS}
    for rec in trials.records:
        if rec.channels is Channels.DOUBLE:
            i = _factor_level(rec.alpha, split_alpha, lo_a)
            j = _factor_level(rec.beta, split_beta, lo_b)
            buckets[f"a{i}b{j}"].append(rec)
        elif rec.channels is Channels.SINGLE_ALPHA:
            i = _factor_level(rec.alpha, split_alpha, lo_a)
            buckets[f"a{i}b0"].append(rec)
        else:
            j = _factor_level(rec.beta, split_beta, lo_b)
            buckets[f"a0b{j}"].append(rec)

    empty = [c for c, rs in buckets.items() if not rs]
    out = {}
    for cond, rs in buckets.items():
        prov = dict(trials.provenance)
        prov["condition"] = cond
        if empty:
            prov["empty_conditions"] = empty
        out[cond] = TrialSet(tuple(rs), prov)
    return out


def suggest_level_assignment(trials: TrialSet, split_alpha: float,
                             split_beta: float) -> tuple[bool, bool]:
    """Report which split direction makes level 1 the slower-processed side.

    Returns (alpha_level1_is_low, beta_level1_is_low): True means the below-
    split interval has the larger mean RT on double-channel trials.
    """
    doubles = [r for r in trials.records if r.channels is Channels.DOUBLE]
    if not doubles:
        raise ValueError("no double-channel trials")
    rts = np.array([r.rt_ms for r in doubles])

    def _slower_is_low(values: np.ndarray, split: float) -> bool:
        low = rts[values < split]
        high = rts[values >= split]
        if low.size == 0 or high.size == 0:
            raise ValueError("one side of the split is empty")
        return bool(np.mean(low) > np.mean(high))

    alphas = np.array([r.alpha for r in doubles])
    betas = np.array([r.beta for r in doubles])
    return _slower_is_low(alphas, split_alpha), _slower_is_low(betas, split_beta)


def condition_rt_samples(partition: dict[str, TrialSet]) -> dict[str, np.ndarray]:
    """RT arrays per condition label, skipping empty conditions."""
    return {c: np.array([r.rt_ms for r in ts.records])
            for c, ts in partition.items() if len(ts)}


def condition_response_samples(partition: dict[str, TrialSet]) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """(A, B) final-response arrays for the four double-channel conditions."""
    out = {}
    for cond in DOUBLE_CONDITIONS:
        ts = partition.get(cond)
        if ts is None or not len(ts):
            raise ValueError(f"empty double-channel condition {cond}")
        out[cond] = (np.array([r.a_final for r in ts.records]),
                     np.array([r.b_final for r in ts.records]))
    return out
