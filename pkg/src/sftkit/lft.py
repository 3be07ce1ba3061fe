"""Linear feasibility test for selective influence.

Pipeline: discretize final responses into per-condition joint tables, check
marginal selectivity statistically, force exact marginal equality, build the
equality system over the joint-quadruple probabilities Q, and decide whether
a nonnegative solution exists.

The decision runs twice by design: a floating-point phase-one simplex with
Bland's rule (production path, returns a witness), and an exact rational
phase-one simplex over the same system (oracle path, removes any tolerance
doubt for 2x2 tables).
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .curves import KsResult, Sided, ks_two_sample
from .trials import DOUBLE_CONDITIONS, TrialSet


@dataclass(frozen=True)
class JointTable:
    """Discrete joint distribution of binned (A, B) under one condition."""

    condition: str
    a_bins: tuple[str, ...]
    b_bins: tuple[str, ...]
    probs: np.ndarray
    count: int

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "a_bins", tuple(self.a_bins))
        object.__setattr__(self, "b_bins", tuple(self.b_bins))
        if probs.shape != (len(self.a_bins), len(self.b_bins)):
            raise ValueError("probs shape does not match bin labels")
        if probs.min() < -1e-12:
            raise ValueError("negative cell probability")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"cell probabilities sum to {probs.sum()}, not 1")

    @property
    def a_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    @property
    def b_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)


class SolveMethod(enum.Enum):
    SIMPLEX = "simplex"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class LftSystem:
    """Equality system matrix . Q = rhs with Q >= 0, one row per observed cell."""

    matrix: np.ndarray
    rhs: np.ndarray
    variable_labels: tuple[tuple[str, str, str, str], ...]
    m: int
    n: int

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "rhs", rhs)
        m, n = self.m, self.n
        if mat.shape != (4 * m * n, m * m * n * n):
            raise ValueError("system matrix has wrong shape")
        if not np.all((mat == 0) | (mat == 1)):
            raise ValueError("matrix entries must be 0/1")
        if not np.all(mat.sum(axis=1) == m * n):
            raise ValueError("each equality row must select exactly m*n variables")
        if rhs.min() < 0:
            raise ValueError("negative rhs entry")
        block = rhs.reshape(4, m * n).sum(axis=1)
        if np.max(np.abs(block - 1.0)) > 1e-9:
            raise ValueError("each condition block of rhs must sum to 1")


@dataclass(frozen=True)
class LftVerdict:
    feasible: bool
    solution: np.ndarray | None
    residual: float
    method: SolveMethod


@dataclass(frozen=True)
class MarginalSelectivityReport:
    tests: dict[str, KsResult]
    alpha_sig: float
    bonferroni: int
    passed: bool


def discretize_responses(conditions: dict[str, TrialSet], a_cuts, b_cuts) -> dict[str, JointTable]:
    """Bin final responses of the four double-channel conditions.

    Cuts induce left-open/right-closed intervals: a value equal to a cut goes
    to the lower bin.  Probabilities are relative frequencies.
    """
    a_cuts = np.asarray(sorted(a_cuts), dtype=float)
    b_cuts = np.asarray(sorted(b_cuts), dtype=float)
    if a_cuts.size == 0 or b_cuts.size == 0:
        raise ValueError("need at least one cut per response")
    m, n = a_cuts.size + 1, b_cuts.size + 1
    a_labels = tuple(f"a{i + 1}" for i in range(m))
    b_labels = tuple(f"b{j + 1}" for j in range(n))

    out = {}
    for cond in DOUBLE_CONDITIONS:
        ts = conditions.get(cond)
        if ts is None or not len(ts):
            raise ValueError(f"empty condition {cond}")
        a_vals = np.array([r.a_final for r in ts.records])
        b_vals = np.array([r.b_final for r in ts.records])
        ai = np.searchsorted(a_cuts, a_vals, side="left")
        bi = np.searchsorted(b_cuts, b_vals, side="left")
        counts = np.zeros((m, n))
        np.add.at(counts, (ai, bi), 1.0)
        out[cond] = JointTable(cond, a_labels, b_labels, counts / len(ts), len(ts))
    return out


def marginal_selectivity_battery(samples: dict[str, tuple[np.ndarray, np.ndarray]],
                                 alpha_sig: float = 0.05,
                                 bonferroni: int = 4) -> MarginalSelectivityReport:
    """Four two-sided KS tests on raw responses: A compared across the other
    factor's levels at each fixed level, and likewise for B.  Passes when all
    four p-values exceed alpha_sig / bonferroni.
    """
    for cond in DOUBLE_CONDITIONS:
        if cond not in samples:
            raise ValueError(f"missing condition {cond}")
    a = {c: samples[c][0] for c in DOUBLE_CONDITIONS}
    b = {c: samples[c][1] for c in DOUBLE_CONDITIONS}
    tests = {
        "A|alpha1": ks_two_sample(a["a1b1"], a["a1b2"], Sided.TWO_SIDED),
        "A|alpha2": ks_two_sample(a["a2b1"], a["a2b2"], Sided.TWO_SIDED),
        "B|beta1": ks_two_sample(b["a1b1"], b["a2b1"], Sided.TWO_SIDED),
        "B|beta2": ks_two_sample(b["a1b2"], b["a2b2"], Sided.TWO_SIDED),
    }
    threshold = alpha_sig / bonferroni
    passed = all(res.p_value > threshold for res in tests.values())
    return MarginalSelectivityReport(tests, alpha_sig, bonferroni, passed)


def averaged_marginals(tables: dict[str, JointTable]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Arithmetic means of the paired marginal estimates.

    Returns (avg_a, avg_b) where avg_a[i] is the A-marginal shared by both
    beta levels at alpha level i+1, and avg_b[j] the B-marginal shared by
    both alpha levels at beta level j+1.
    """
    t = {c: tables[c] for c in DOUBLE_CONDITIONS}
    avg_a = [(t["a1b1"].a_marginal + t["a1b2"].a_marginal) / 2.0,
             (t["a2b1"].a_marginal + t["a2b2"].a_marginal) / 2.0]
    avg_b = [(t["a1b1"].b_marginal + t["a2b1"].b_marginal) / 2.0,
             (t["a1b2"].b_marginal + t["a2b2"].b_marginal) / 2.0]
    return avg_a, avg_b


def repair_joint_2x2(p_a1b1: float, mean_a1: float, mean_b1: float) -> np.ndarray:
    """Rebuild a 2x2 joint from its kept top-left cell and target marginals.

    The top-left cell is preserved; the other three cells absorb the marginal
    adjustment.  Raises when the adjustment would force a cell below -1e-12.
    """
    cells = np.array([
        [p_a1b1, mean_a1 - p_a1b1],
        [mean_b1 - p_a1b1, 1.0 - mean_a1 - mean_b1 + p_a1b1],
    ])
    if cells.min() < -1e-12:
        raise ValueError("repair produced negative probability")
    return np.clip(cells, 0.0, None)


def _ipf(table: np.ndarray, row_target: np.ndarray, col_target: np.ndarray,
         tol: float = 1e-10, max_sweeps: int = 10000) -> np.ndarray:
    cur = table.copy()
    if np.any((cur.sum(axis=1) == 0) & (row_target > 0)) or \
       np.any((cur.sum(axis=0) == 0) & (col_target > 0)):
        raise ValueError("cannot repair: empty row/column with positive target marginal")
    for _ in range(max_sweeps):
        rs = cur.sum(axis=1)
        cur *= np.where(rs > 0, row_target / np.where(rs > 0, rs, 1.0), 0.0)[:, None]
        cs = cur.sum(axis=0)
        cur *= np.where(cs > 0, col_target / np.where(cs > 0, cs, 1.0), 0.0)[None, :]
        err = max(np.max(np.abs(cur.sum(axis=1) - row_target)),
                  np.max(np.abs(cur.sum(axis=0) - col_target)))
        if err <= tol:
            return cur
    raise ValueError("iterative proportional fitting did not converge")


def enforce_marginal_equality(tables: dict[str, JointTable]) -> dict[str, JointTable]:
    """Replace each paired marginal by its arithmetic mean and adjust cells.

    2x2 tables keep their P(a1, b1) cell and push all adjustment into the
    other three cells.  Larger tables are refit toward the averaged marginals
    by iterative proportional fitting.
    """
    avg_a, avg_b = averaged_marginals(tables)
    out = {}
    for cond in DOUBLE_CONDITIONS:
        tab = tables[cond]
        i = int(cond[1]) - 1
        j = int(cond[3]) - 1
        m, n = len(tab.a_bins), len(tab.b_bins)
        if m == 2 and n == 2:
            cells = repair_joint_2x2(float(tab.probs[0, 0]),
                                     float(avg_a[i][0]), float(avg_b[j][0]))
        else:
            cells = _ipf(tab.probs, avg_a[i], avg_b[j])
        out[cond] = JointTable(cond, tab.a_bins, tab.b_bins, cells, tab.count)
    return out


def _marginal_mismatch(tables: dict[str, JointTable]) -> float:
    t = {c: tables[c] for c in DOUBLE_CONDITIONS}
    return max(
        float(np.max(np.abs(t["a1b1"].a_marginal - t["a1b2"].a_marginal))),
        float(np.max(np.abs(t["a2b1"].a_marginal - t["a2b2"].a_marginal))),
        float(np.max(np.abs(t["a1b1"].b_marginal - t["a2b1"].b_marginal))),
        float(np.max(np.abs(t["a1b2"].b_marginal - t["a2b2"].b_marginal))),
    )


def build_lft_system(tables: dict[str, JointTable], marginal_tol: float = 1e-12) -> LftSystem:
    """Assemble the equality system over quadruple probabilities Q.

    Variables are indexed lexicographically by (a-bin under alpha1, a-bin
    under alpha2, b-bin under beta1, b-bin under beta2).  The equality row
    for condition a<i>b<j>, cell (a, b) selects every Q whose i-th a-index is
    a and whose j-th b-index is b.  Requires exactly equal marginals.
    """
    first = tables[DOUBLE_CONDITIONS[0]]
    m, n = len(first.a_bins), len(first.b_bins)
    for cond in DOUBLE_CONDITIONS:
        tab = tables[cond]
        if (len(tab.a_bins), len(tab.b_bins)) != (m, n):
            raise ValueError("all four tables must share bin structure")
    mismatch = _marginal_mismatch(tables)
    if mismatch > marginal_tol:
        raise ValueError(f"marginal mismatch {mismatch:g} exceeds tolerance {marginal_tol:g}")

    a1 = first.a_bins
    b1 = first.b_bins
    labels = tuple(itertools.product(a1, a1, b1, b1))
    q_index = np.array(list(itertools.product(range(m), range(m), range(n), range(n))))

    n_vars = m * m * n * n
    matrix = np.zeros((4 * m * n, n_vars))
    rhs = np.zeros(4 * m * n)
    row = 0
    for (i, j) in ((1, 1), (1, 2), (2, 1), (2, 2)):
        tab = tables[f"a{i}b{j}"]
        a_digit = q_index[:, i - 1]
        b_digit = q_index[:, 2 + j - 1]
        for a in range(m):
            for b in range(n):
                matrix[row, (a_digit == a) & (b_digit == b)] = 1.0
                rhs[row] = tab.probs[a, b]
                row += 1
    vlabels = tuple((la1, la2, lb1, lb2) for (la1, la2, lb1, lb2) in labels)
    return LftSystem(matrix, rhs, vlabels, m, n)


def _phase_one_simplex(A: np.ndarray, b: np.ndarray,
                       tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Phase-one simplex with Bland's rule on {x >= 0, A x = b}.

    Minimizes the total artificial slack; returns (optimum, x).  Bland's
    anti-cycling rule (lowest eligible index for both entering and leaving
    variables) makes the returned vertex deterministic.
    """
    n_rows, n_cols = A.shape
    A = A.copy()
    b = b.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # tableau: [A | I | b]; initial basis = artificials
    T = np.hstack([A, np.eye(n_rows), b[:, None]])
    basis = list(range(n_cols, n_cols + n_rows))
    # reduced costs for min sum(artificials): r_j = c_j - sum_i T[i, j]
    cost = np.zeros(n_cols + n_rows)
    cost[n_cols:] = 1.0
    r = cost - T[:, :-1].sum(axis=0)

    while True:
        entering = -1
        for j in range(n_cols + n_rows):
            if r[j] < -tol:
                entering = j
                break
        if entering < 0:
            break
        col = T[:, entering]
        best_ratio = np.inf
        leave = -1
        for i in range(n_rows):
            if col[i] > 1e-10:
                ratio = T[i, -1] / col[i]
                if ratio < best_ratio - 1e-12 or (
                        abs(ratio - best_ratio) <= 1e-12 and
                        (leave < 0 or basis[i] < basis[leave])):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise RuntimeError("phase-one objective unbounded; should not happen")
        piv = T[leave, entering]
        T[leave] /= piv
        for i in range(n_rows):
            if i != leave and T[i, entering] != 0.0:
                T[i] -= T[i, entering] * T[leave]
        r = r - r[entering] * T[leave, :-1]
        basis[leave] = entering

    x = np.zeros(n_cols)
    optimum = 0.0
    for i, bv in enumerate(basis):
        if bv < n_cols:
            x[bv] = T[i, -1]
        else:
            optimum += T[i, -1]
    return optimum, np.clip(x, 0.0, None)


def solve_lft(system: LftSystem, feasibility_tol: float = 1e-9) -> LftVerdict:
    """Decide feasibility of {Q >= 0, matrix . Q = rhs} and return a witness."""
    optimum, x = _phase_one_simplex(system.matrix, system.rhs)
    feasible = bool(optimum <= feasibility_tol)
    residual = float(np.max(np.abs(system.matrix @ x - system.rhs)))
    return LftVerdict(feasible, x if feasible else None, residual, SolveMethod.SIMPLEX)


def witness_residual(system: LftSystem, q: np.ndarray) -> float:
    """Max absolute equality violation of a candidate solution vector."""
    q = np.asarray(q, dtype=float)
    return float(np.max(np.abs(system.matrix @ q - system.rhs)))


def _exact_phase_one(A_int: np.ndarray, b: list[Fraction]) -> bool:
    """Exact-rational phase-one simplex; returns True iff the optimum is 0."""
    n_rows, n_cols = A_int.shape
    zero, one = Fraction(0), Fraction(1)
    T = [[Fraction(int(A_int[i, j])) for j in range(n_cols)]
         + [one if k == i else zero for k in range(n_rows)]
         + [b[i]] for i in range(n_rows)]
    basis = list(range(n_cols, n_cols + n_rows))
    r = [zero] * (n_cols + n_rows)
    for j in range(n_cols + n_rows):
        cost = one if j >= n_cols else zero
        r[j] = cost - sum(T[i][j] for i in range(n_rows))

    while True:
        entering = -1
        for j in range(n_cols + n_rows):
            if r[j] < 0:
                entering = j
                break
        if entering < 0:
            break
        leave = -1
        best = None
        for i in range(n_rows):
            if T[i][entering] > 0:
                ratio = T[i][-1] / T[i][entering]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            raise RuntimeError("exact phase-one unbounded; should not happen")
        piv = T[leave][entering]
        T[leave] = [v / piv for v in T[leave]]
        for i in range(n_rows):
            if i != leave and T[i][entering] != 0:
                f = T[i][entering]
                T[i] = [vi - f * vl for vi, vl in zip(T[i], T[leave])]
        f = r[entering]
        if f != 0:
            r = [rj - f * vl for rj, vl in zip(r, T[leave][:-1])]
        basis[leave] = entering

    optimum = sum(T[i][-1] for i in range(n_rows) if basis[i] >= n_cols)
    return optimum == 0


def _to_fraction(x) -> Fraction:
    # Empirical cell probabilities are ratios of trial counts (or small
    # arithmetic over them), so a float input is snapped to the nearest
    # rational with denominator <= 1e12; this recovers the underlying ratio
    # exactly and keeps block sums exactly consistent.  Fractions pass
    # through untouched.
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x).limit_denominator(10**12)


def exhaustive_lft_oracle(tables: dict[str, JointTable | object]) -> bool:
    """Exact feasibility decision for 2x2 tables.

    The 16 deterministic quadruples are exactly the unit vectors of Q-space,
    so feasibility is membership of the observed joints in the convex hull of
    their images; this is decided by solving the same equality system with
    exact rational arithmetic.  Tables may carry floats (converted exactly)
    or Fractions.
    """
    probs = {}
    for cond in DOUBLE_CONDITIONS:
        tab = tables[cond]
        p = tab.probs.tolist() if isinstance(tab, JointTable) else [list(r) for r in tab]
        if len(p) != 2 or any(len(r) != 2 for r in p):
            raise ValueError("exhaustive oracle supports 2x2 tables only")
        probs[cond] = [[_to_fraction(v) for v in r] for r in p]

    q_index = list(itertools.product(range(2), range(2), range(2), range(2)))
    A = np.zeros((16, 16), dtype=np.int64)
    b: list[Fraction] = []
    row = 0
    for (i, j) in ((1, 1), (1, 2), (2, 1), (2, 2)):
        cells = probs[f"a{i}b{j}"]
        for a in range(2):
            for bb in range(2):
                for col, q in enumerate(q_index):
                    if q[i - 1] == a and q[2 + j - 1] == bb:
                        A[row, col] = 1
                b.append(cells[a][bb])
                row += 1
    return _exact_phase_one(A, b)


def joint_tables_to_csv(tables: dict[str, JointTable]) -> str:
    """CSV block rendering: condition, a_bin, b_bin, prob, count."""
    lines = ["condition,a_bin,b_bin,prob,count"]
    for cond in DOUBLE_CONDITIONS:
        tab = tables[cond]
        for i, la in enumerate(tab.a_bins):
            for j, lb in enumerate(tab.b_bins):
                lines.append(f"{cond},{la},{lb},{float(tab.probs[i, j])!r},{tab.count}")
    return "\n".join(lines) + "\n"


def joint_tables_from_csv(text: str) -> dict[str, JointTable]:
    """Inverse of joint_tables_to_csv."""
    rows = [ln.split(",") for ln in text.strip().splitlines()[1:]]
    by_cond: dict[str, dict] = {}
    for cond, la, lb, prob, count in rows:
        entry = by_cond.setdefault(cond, {"cells": {}, "count": int(count)})
        entry["cells"][(la, lb)] = float(prob)
    out = {}
    for cond, entry in by_cond.items():
        a_bins = tuple(sorted({k[0] for k in entry["cells"]}))
        b_bins = tuple(sorted({k[1] for k in entry["cells"]}))
        probs = np.array([[entry["cells"][(la, lb)] for lb in b_bins] for la in a_bins])
        out[cond] = JointTable(cond, a_bins, b_bins, probs, entry["count"])
    return out


def format_joint_tables(tables: dict[str, JointTable]) -> str:
    """Human-readable per-condition grids with marginals."""
    chunks = []
    for cond in DOUBLE_CONDITIONS:
        tab = tables[cond]
        head = "      " + "  ".join(f"{lb:>8}" for lb in tab.b_bins) + "  | A-marg"
        lines = [f"[{cond}]  (n={tab.count})", head]
        for i, la in enumerate(tab.a_bins):
            cells = "  ".join(f"{tab.probs[i, j]:8.4f}" for j in range(len(tab.b_bins)))
            lines.append(f"{la:>4}  {cells}  | {tab.a_marginal[i]:6.4f}")
        lines.append("B-marg " + "  ".join(f"{v:8.4f}" for v in tab.b_marginal))
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"
