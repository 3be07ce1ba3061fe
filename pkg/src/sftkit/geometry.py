"""Task geometry shared with the browser task runner.

The floral outline is a radius-modulated circle: base radius 70 px with two
cosine amplitude terms.  Trackball motion maps to amplitude changes through a
remaining-distance step, so negative amplitudes respond more sensitively than
positive ones.
"""
from __future__ import annotations

import numpy as np

SHAPE_POINTS = 100
BASE_RADIUS = 70.0


def floral_shape_points(a: float, b: float) -> np.ndarray:
    """100 outline points (x, y) of the floral shape with amplitudes (a, b)."""
    d = np.arange(SHAPE_POINTS)
    radius = BASE_RADIUS + a * np.cos(0.06 * np.pi * d) + b * np.cos(0.1 * np.pi * d)
    return np.column_stack([np.cos(0.02 * np.pi * d) * radius,
                            np.sin(0.02 * np.pi * d) * radius])


def _sign(v: int) -> float:
    return float((v > 0) - (v < 0))


def apply_trackball_delta(a: float, b: float, dx: int, dy: int) -> tuple[float, float]:
    """One amplitude update from a trackball move; both deltas read the old
    (a, b).  sign(0) contributes no step."""
    a_new = a + _sign(dx) * ((BASE_RADIUS - a - abs(b)) / 100.0)
    b_new = b + _sign(dy) * ((BASE_RADIUS - abs(a) - b) / 100.0)
    return a_new, b_new


# Amplitude pairs covered by the golden vectors (all satisfy |a| + |b| < 70).
GOLDEN_AMPLITUDES = (-30.0, -15.0, -5.0, 0.0, 5.0, 10.0, 15.0, 30.0)

# Single trackball steps: every amplitude pair crossed with these deltas.
GOLDEN_DELTAS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (0, 0))

# Step sequences: (start_a, start_b, dx, dy, n_steps) applied iteratively.
GOLDEN_SEQUENCES = ((0.0, 0.0, 1, 0, 10), (10.0, -5.0, 0, -1, 3), (-35.0, 0.0, 1, 0, 5))


def _fmt(x: float) -> str:
    # fixed 12-decimal print: absolute 1e-12 precision, byte-stable
    s = f"{x:.12f}"
    return "0." + "0" * 12 if s == "-0." + "0" * 12 else s


def golden_shape_csv() -> str:
    """CSV of shape points (a, b, delta, x, y) over the amplitude grid."""
    lines = ["a,b,delta,x,y"]
    for a in GOLDEN_AMPLITUDES:
        for b in GOLDEN_AMPLITUDES:
            pts = floral_shape_points(a, b)
            for d in range(SHAPE_POINTS):
                lines.append(f"{_fmt(a)},{_fmt(b)},{d},{_fmt(pts[d, 0])},{_fmt(pts[d, 1])}")
    return "\n".join(lines) + "\n"


def golden_trackball_csv() -> str:
    """CSV of trackball updates (a, b, dx, dy, a_new, b_new): one row per
    single step, then the canonical iterated sequences row by row."""
    lines = ["a,b,dx,dy,a_new,b_new"]

    def _row(a, b, dx, dy):
        an, bn = apply_trackball_delta(a, b, dx, dy)
        lines.append(f"{_fmt(a)},{_fmt(b)},{dx},{dy},{_fmt(an)},{_fmt(bn)}")
        return an, bn

    for a in GOLDEN_AMPLITUDES:
        for b in GOLDEN_AMPLITUDES:
            for dx, dy in GOLDEN_DELTAS:
                _row(a, b, dx, dy)
    for a, b, dx, dy, n in GOLDEN_SEQUENCES:
        for _ in range(n):
            a, b = _row(a, b, dx, dy)
    return "\n".join(lines) + "\n"


def shape_radius(a: float, b: float) -> np.ndarray:
    """Point distances from the origin (constant 70 when a = b = 0)."""
    pts = floral_shape_points(a, b)
    return np.hypot(pts[:, 0], pts[:, 1])
