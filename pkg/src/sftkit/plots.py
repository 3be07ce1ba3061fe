"""SVG curve plots for reports (byte-reproducible output)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from . import capacity as cap  # noqa: E402
from .contrast import SicProfile  # noqa: E402
from .curves import survival  # noqa: E402

_SVG_OPTS = {"format": "svg", "metadata": {"Date": None}}


def _new_fig():
    plt.rcParams["svg.hashsalt"] = "sftkit"
    return plt.subplots(figsize=(6.4, 4.2))


def plot_survivals(rt_samples: dict[str, np.ndarray], path) -> None:
    fig, ax = _new_fig()
    for cond in ("a1b1", "a1b2", "a2b1", "a2b2"):
        if cond in rt_samples and rt_samples[cond].size:
            curve = survival(rt_samples[cond])
            ax.step(curve.grid, curve.values, where="post", label=cond)
    ax.set_xlabel("t (ms)")
    ax.set_ylabel("S(t)")
    ax.legend()
    fig.savefig(path, **_SVG_OPTS)
    plt.close(fig)


def plot_sic(profile: SicProfile, path) -> None:
    fig, ax = _new_fig()
    ax.step(profile.grid, profile.sic, where="post", color="tab:blue")
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel("t (ms)")
    ax.set_ylabel("SIC(t)")
    fig.savefig(path, **_SVG_OPTS)
    plt.close(fig)


def plot_capacity(curve: cap.CapacityCurve, rule: str, path) -> None:
    fig, ax = _new_fig()
    ax.plot(curve.grid, curve.c, color="tab:blue", lw=1.0, label=f"C_{rule.upper()}")
    if curve.band_lo is not None:
        ok = np.isfinite(curve.band_lo)
        ax.fill_between(curve.grid[ok], curve.band_lo[ok], curve.band_hi[ok],
                        alpha=0.25, color="tab:blue", linewidth=0)
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.set_xlabel("t (ms)")
    ax.set_ylabel("capacity")
    ax.set_ylim(0, 3)
    ax.legend()
    fig.savefig(path, **_SVG_OPTS)
    plt.close(fig)
