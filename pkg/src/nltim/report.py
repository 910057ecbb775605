"""Figures written next to the JSON/CSV reports."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
from matplotlib import pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _style(ax):
    ax.tick_params(direction="in", top=True, right=True)
    ax.grid(linestyle="dashed", color="0.7", linewidth=0.4)


def savefig(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no Software/date metadata so reruns write identical files
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trajectory(traj, path):
    net = traj.net
    cols = list(net.nodes)
    fig, ax = plt.subplots(figsize=(max(4, 0.35 * len(cols) + 2), max(2.5, 0.3 * traj.horizon + 1.5)))
    ax.imshow(traj.active[:, cols].astype(int), cmap="Greys", aspect="auto", vmin=0, vmax=1, interpolation="nearest")
    ax.set_xticks(range(len(cols)))
    ax.set_xticklabels([net.labels[v] for v in cols], rotation=90, fontsize=7)
    ax.set_ylabel("t")
    ax.set_title("active nodes")
    return savefig(fig, path)


def plot_expected_activity(q: np.ndarray, counted: np.ndarray, path, label="expected active nodes"):
    per_t = q[:, counted].sum(axis=1)
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(np.arange(len(per_t)), per_t, marker="o", ms=3, color="k")
    ax.set_xlabel("t")
    ax.set_ylabel(label)
    _style(ax)
    return savefig(fig, path)


def plot_counterexample(gains_small, gains_large, path, title=""):
    t = np.arange(1, len(gains_small) + 1)
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(t, gains_small, marker="o", ms=3, label="gain at smaller set")
    ax.plot(t, gains_large, marker="s", ms=3, label="gain at larger set")
    ax.set_xlabel("t")
    ax.set_ylabel("marginal gain of E[X]")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title(title, fontsize=9)
    _style(ax)
    return savefig(fig, path)


def plot_ratio_histogram(ratios, path):
    ratios = np.asarray(ratios)
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.hist(ratios, bins=np.linspace(min(0.5, ratios.min()), 1.0, 21), color="0.4", edgecolor="k", linewidth=0.5)
    ax.axvline(0.5, color="r", linestyle="--", linewidth=1)
    ax.set_xlabel("greedy / optimum")
    ax.set_ylabel("instances")
    _style(ax)
    return savefig(fig, path)
