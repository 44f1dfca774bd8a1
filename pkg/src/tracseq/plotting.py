"""Figures for the ``report`` command. Everything renders off-screen to files."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}

COLORS = {"top": "#1b7837", "random": "#4d4d4d", "bottom": "#b2182b", "full": "#2166ac"}


def figsize(width: float = 4.5, ratio: float | None = None) -> tuple[float, float]:
    ratio = ratio or (np.sqrt(5.0) - 1.0) / 2.0
    return width, width * ratio


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    # fixed metadata keeps PNG bytes stable between runs
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_pruning(rows: Sequence, path: str | Path, metric: str = "ks") -> Path:
    """Median held-out metric against kept fraction, one line per strategy.

    ``rows`` are :class:`tracseq.experiments.PruningRow` objects; the
    ``full`` rows become a horizontal reference line.
    """
    grouped: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        grouped[r.strategy][r.fraction].append(getattr(r, metric))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for strategy in ("top", "random", "bottom"):
            if strategy not in grouped:
                continue
            xs = sorted(grouped[strategy])
            med = [np.median(grouped[strategy][x]) for x in xs]
            lo = [np.min(grouped[strategy][x]) for x in xs]
            hi = [np.max(grouped[strategy][x]) for x in xs]
            ax.plot(xs, med, marker="o", ms=3, color=COLORS[strategy],
                    label=f"{strategy} influence" if strategy != "random" else "random")
            ax.fill_between(xs, lo, hi, color=COLORS[strategy], alpha=0.15, lw=0)
        if "full" in grouped:
            full = np.median(grouped["full"][1.0])
            ax.axhline(full, color=COLORS["full"], ls="--", lw=1, label="all samples")
        ax.set_xlabel("fraction of training samples kept")
        ax.set_ylabel(f"held-out {metric.upper()}")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_self_influence(scores: np.ndarray, flipped: Sequence[bool], path: str | Path) -> Path:
    scores = np.asarray(scores)
    flipped = np.asarray(flipped, dtype=bool)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        bins = np.histogram_bin_edges(scores, bins=30)
        ax.hist(scores[~flipped], bins=bins, color=COLORS["random"], alpha=0.7, label="clean")
        ax.hist(scores[flipped], bins=bins, color=COLORS["bottom"], alpha=0.7, label="flipped")
        ax.set_xlabel("self-influence")
        ax.set_ylabel("samples")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_loo_agreement(scores: np.ndarray, deltas: np.ndarray, rho: float, path: str | Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(ratio=1.0))
        ax.scatter(scores, deltas, s=8, color=COLORS["full"])
        ax.set_xlabel("TracSeq score (final checkpoint)")
        ax.set_ylabel("eval-loss change when removed")
        ax.set_title(f"Spearman rho = {rho:.3f}")
        return _save(fig, path)
