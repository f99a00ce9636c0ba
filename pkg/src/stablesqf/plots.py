"""Figure rendering for CLI reports.

Every helper takes data plus an output path, draws one figure with the Agg
backend, and writes the file format implied by the suffix (.svg for the
frontier scatter, .png elsewhere by convention).  CSV stays the canonical
output; these are companions for quick visual inspection.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_pareto(rows: list[dict], path):
    """Quality/stability frontier: one labeled point per model."""
    fig, ax = plt.subplots(figsize=(7, 5))
    pts = [(float(r["sW1"]), float(r["sCRPS"]), str(r["model"])) for r in rows]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    order = np.argsort(xs)
    ax.plot(np.array(xs)[order], np.array(ys)[order], color="0.75", lw=1, zorder=1)
    ax.scatter(xs, ys, color="tab:blue", zorder=2)
    for x, y, label in pts:
        ax.annotate(label, (x, y), textcoords="offset points", xytext=(5, 4), fontsize=8)
    ax.set_xlabel("sW1 (lower = more stable)")
    ax.set_ylabel("sCRPS (lower = more accurate)")
    ax.set_title("quality vs stability frontier")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trace(trace: list, path):
    """Training curves: composite loss with its quality/instability parts."""
    arr = np.asarray(trace, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4))
    if arr.size:
        ax.plot(arr[:, 0], arr[:, 3], label="total", color="black", lw=1.2)
        ax.plot(arr[:, 0], arr[:, 1], label="quality", color="tab:blue", lw=0.9, alpha=0.8)
        ax.plot(arr[:, 0], arr[:, 2], label="instability", color="tab:red", lw=0.9, alpha=0.8)
        ax.legend()
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_title("training trace")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_by_horizon(scrps_by_h: np.ndarray, sw1_by_h: np.ndarray, path):
    """Per-horizon breakdown of the pooled evaluation metrics."""
    h = len(scrps_by_h)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    axes[0].bar(np.arange(1, h + 1), scrps_by_h, color="tab:blue")
    axes[0].set_xlabel("horizon")
    axes[0].set_title("sCRPS by horizon")
    sw1 = np.asarray(sw1_by_h, dtype=float)
    if sw1.size and np.all(np.isfinite(sw1)):
        axes[1].bar(np.arange(2, sw1.size + 2), sw1, color="tab:red")
    axes[1].set_xlabel("horizon (vs previous origin)")
    axes[1].set_title("sW1 by horizon")
    for ax in axes:
        ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_fan(history: np.ndarray, q: np.ndarray, alphas: np.ndarray, path, title: str = ""):
    """History plus forecast bands: q is (h, M) for one origin."""
    history = np.asarray(history, dtype=float)
    q = np.asarray(q, dtype=float)
    t_hist = np.arange(history.size)
    t_fut = history.size - 1 + np.arange(1, q.shape[0] + 1)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t_hist, history, color="black", lw=1.2, label="history")
    for lo, hi, a in ((0.05, 0.95, 0.15), (0.25, 0.75, 0.3)):
        band_lo = [np.interp(lo, alphas, row) for row in q]
        band_hi = [np.interp(hi, alphas, row) for row in q]
        ax.fill_between(t_fut, band_lo, band_hi, color="tab:blue", alpha=a, lw=0)
    med = [np.interp(0.5, alphas, row) for row in q]
    ax.plot(t_fut, med, color="tab:blue", marker="o", ms=3, lw=1.2, label="median")
    ax.axvline(history.size - 1, color="0.6", ls="--", lw=0.8)
    ax.set_xlabel("time")
    ax.legend()
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_newsvendor(table2: list[dict], table3: list[dict], path):
    """Toy-experiment summary: accuracy/stability bars and profit bars."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.8))
    kinds = ("stable", "unstable")
    colors = {"stable": "tab:blue", "unstable": "tab:red"}

    origins = [r["origin"] for r in table2 if r["forecaster"] == kinds[0]]
    xs = np.arange(len(origins))
    for off, k in zip((-0.18, 0.18), kinds):
        crps = [r["crps"] for r in table2 if r["forecaster"] == k]
        axes[0].bar(xs + off, crps, width=0.34, color=colors[k], label=k)
    axes[0].set_xticks(xs, origins)
    axes[0].set_title("CRPS by origin")
    axes[0].legend(fontsize=8)

    pair_labels = [f"{origins[i]}→{origins[i + 1]}" for i in range(len(origins) - 1)]
    xs2 = np.arange(len(pair_labels))
    for off, k in zip((-0.18, 0.18), kinds):
        w1 = [r["w1_adjacent"] for r in table2 if r["forecaster"] == k][1:]
        axes[1].bar(xs2 + off, w1, width=0.34, color=colors[k])
    axes[1].set_xticks(xs2, pair_labels)
    axes[1].set_title("revision W1")

    strategies = [r["strategy"] for r in table3]
    xs3 = np.arange(len(strategies))
    axes[2].bar(xs3 - 0.18, [r["profit_stable"] for r in table3], width=0.34,
                color="tab:blue", label="stable")
    axes[2].bar(xs3 + 0.18, [r["profit_unstable"] for r in table3], width=0.34,
                color="tab:red", label="unstable")
    axes[2].set_xticks(xs3, [s.replace("-", "\n") for s in strategies], fontsize=8)
    axes[2].set_title("mean profit by strategy")
    axes[2].legend(fontsize=8)

    for ax in axes:
        ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
