"""Optional figure rendering next to the delimited output.

Every helper takes already-computed arrays and writes a single PNG.  Nothing
here recomputes physics; the CSV stays the canonical record and plots are an
opt-in convenience (``--plot``).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_evolution",
    "plot_distribution",
    "plot_mgf",
    "plot_rate_matrix",
]


def plot_evolution(times, series, path, ylabel="value", title=None):
    """Line plot of named time series; ``series`` maps label -> array."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    t = np.asarray(times, dtype=float)
    for label, values in series.items():
        v = np.asarray(values, dtype=float)
        mask = np.isfinite(v)
        ax.plot(t[mask], v[mask], marker="o", ms=3, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def plot_distribution(support, probabilities, path, title=None):
    """Stem plot of a discrete law on the entropy-change support."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.stem(np.asarray(support, dtype=float), np.asarray(probabilities, dtype=float))
    ax.set_xlabel("entropy change")
    ax.set_ylabel("probability")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def plot_mgf(alphas, curves, path, title=None):
    """Moment generating function vs alpha; ``curves`` maps label -> values."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    a = np.asarray(alphas, dtype=float)
    for label, values in curves.items():
        ax.plot(a, np.asarray(values, dtype=float), marker="s", ms=3, label=label)
    ax.set_xlabel("alpha")
    ax.set_ylabel("mgf")
    if title:
        ax.set_title(title)
    if curves:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def plot_rate_matrix(states, rates, path, title=None):
    """Heatmap of the classical rate matrix with state labels."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.imshow(np.asarray(rates, dtype=float), cmap="RdBu_r")
    labels = [f"{s:.3g}" for s in states]
    ax.set_xticks(range(len(labels)), labels, fontsize=8)
    ax.set_yticks(range(len(labels)), labels, fontsize=8)
    ax.set_xlabel("to state")
    ax.set_ylabel("from state")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
