"""Shared test helpers: exact-rational instance generation for the joint
feasibility system, plus an independent convex-hull membership criterion."""
import math
from fractions import Fraction

import numpy as np

from sftkit.lft import JointTable

CONDS = ("a1b1", "a1b2", "a2b1", "a2b2")


def random_consistent_tables(rng: np.random.Generator, denom: int = 400):
    """Random 2x2 condition tables with exactly equal marginals.

    Cells are multiples of 1/denom, so both the float solver and the exact
    oracle see the same mathematical instance.
    """
    pa = [Fraction(int(rng.integers(1, denom)), denom) for _ in range(2)]
    pb = [Fraction(int(rng.integers(1, denom)), denom) for _ in range(2)]
    tables = {}
    for i in (1, 2):
        for j in (1, 2):
            lo = max(Fraction(0), pa[i - 1] + pb[j - 1] - 1)
            hi = min(pa[i - 1], pb[j - 1])
            lo_k = math.ceil(lo * denom)
            hi_k = math.floor(hi * denom)
            k = int(rng.integers(lo_k, hi_k + 1))
            p11 = Fraction(k, denom)
            tables[f"a{i}b{j}"] = [
                [p11, pa[i - 1] - p11],
                [pb[j - 1] - p11, 1 - pa[i - 1] - pb[j - 1] + p11],
            ]
    return tables


def tables_to_joint(tables_fr) -> dict:
    return {cond: JointTable(cond, ("a1", "a2"), ("b1", "b2"),
                             np.array([[float(v) for v in row] for row in t]),
                             400)
            for cond, t in tables_fr.items()}


def chsh_feasible(tables_fr) -> bool:
    """Independent criterion: a 2x2 binary no-signaling behavior admits a
    joint quadruple iff all eight correlation-sum inequalities hold."""
    e = {}
    for cond, t in tables_fr.items():
        e[cond] = t[0][0] + t[1][1] - t[0][1] - t[1][0]
    es = [e[c] for c in CONDS]
    for flip in range(4):
        s = sum(-v if k == flip else v for k, v in enumerate(es))
        if s > 2 or s < -2:
            return False
    return True


PR_BOX = {
    "a1b1": [[Fraction(1, 2), Fraction(0)], [Fraction(0), Fraction(1, 2)]],
    "a1b2": [[Fraction(1, 2), Fraction(0)], [Fraction(0), Fraction(1, 2)]],
    "a2b1": [[Fraction(1, 2), Fraction(0)], [Fraction(0), Fraction(1, 2)]],
    "a2b2": [[Fraction(0), Fraction(1, 2)], [Fraction(1, 2), Fraction(0)]],
}

WORKED_EXAMPLE = {
    "a1b1": [[Fraction(2, 10), Fraction(2, 10)], [Fraction(1, 10), Fraction(5, 10)]],
    "a1b2": [[Fraction(3, 10), Fraction(1, 10)], [Fraction(4, 10), Fraction(2, 10)]],
    "a2b1": [[Fraction(1, 10), Fraction(5, 10)], [Fraction(2, 10), Fraction(2, 10)]],
    "a2b2": [[Fraction(4, 10), Fraction(2, 10)], [Fraction(3, 10), Fraction(1, 10)]],
}

WORKED_EXAMPLE_WITNESS = np.array(
    [0, 0, 0, 0, .1, .1, .2, 0, 0, .1, .4, .1, 0, 0, 0, 0])
