"""Figure rendering for CLI reports.

Every renderer takes the already-computed report data and writes one PNG,
so figures always agree with the delimited output emitted next to them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
}


def _new_axes():
    plt.rcParams.update(_STYLE)
    fig, ax = plt.subplots()
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def node_homophily_figure(node_scores_by_level: dict, path):
    """Sorted node-score curves, one line per message-passing level."""
    fig, ax = _new_axes()
    for level, scores in sorted(node_scores_by_level.items()):
        defined = sorted(s for s in scores if s is not None)
        ax.plot(range(len(defined)), defined, label=f"level {level}", linewidth=1.4)
    ax.set_xlabel("nodes (sorted by score)")
    ax.set_ylabel("node homophily")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    return _save(fig, path)


def delta_grid_figure(mus, values, t, path):
    fig, ax = _new_axes()
    ax.plot(mus, values, marker="o", linewidth=1.4)
    ax.set_xlabel("threshold")
    ax.set_ylabel(f"stable-node fraction at level {t}")
    ax.set_ylim(-0.02, 1.02)
    return _save(fig, path)


def class_shift_figure(report, path):
    """Grouped bars: original vs sampled class histograms."""
    fig, ax = _new_axes()
    C = report.num_classes
    xs = np.arange(C)
    width = 0.27
    ax.bar(xs - width, report.original, width, label="original")
    ax.bar(xs, report.step1_only, width, label="step 1 only")
    ax.bar(xs + width, report.step1_and_2, width, label="steps 1 and 2")
    ax.set_xlabel("class")
    ax.set_ylabel("share of exposure")
    ax.set_xticks(xs)
    ax.legend()
    return _save(fig, path)


def pmf_figure(epochs, pmf, empirical, path):
    fig, ax = _new_axes()
    ax.plot(epochs, pmf, marker="o", label="closed form", linewidth=1.4)
    if empirical is not None:
        ax.plot(epochs, empirical, marker="x", label="simulated", linewidth=1.1)
    ax.set_xlabel("first-draw epoch")
    ax.set_ylabel("probability")
    ax.legend()
    return _save(fig, path)


def kuniform_figure(report, path):
    """Affinity vs baseline per type, one panel row per participating class."""
    classes = [c for c in range(report.num_classes) if report.participating[c]]
    plt.rcParams.update(_STYLE)
    rows = max(1, len(classes))
    fig, axes = plt.subplots(rows, 1, figsize=(7.0, 2.2 * rows), squeeze=False)
    ts = np.arange(1, report.k + 1)
    for ax, c in zip(axes[:, 0], classes):
        ax.bar(ts - 0.18, report.affinity[c], 0.36, label="affinity")
        if report.baseline[c] is not None:
            ax.bar(ts + 0.18, report.baseline[c], 0.36, label="baseline")
        ax.set_ylabel(f"class {c}")
        ax.set_xticks(ts)
        ax.legend(fontsize=8)
    axes[-1, 0].set_xlabel("members of the class in the hyperedge")
    return _save(fig, path)


def loss_curve_figure(report, path):
    fig, ax = _new_axes()
    epochs = np.arange(1, len(report.loss_curve) + 1)
    ax.plot(epochs, report.loss_curve, label="train loss", linewidth=1.4)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    if report.val_curve and np.isfinite(report.val_curve).any():
        twin = ax.twinx()
        twin.plot(epochs, report.val_curve, color="tab:orange", label="val acc", linewidth=1.1)
        twin.set_ylabel("validation accuracy (%)")
    return _save(fig, path)
