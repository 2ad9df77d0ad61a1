"""Figures written next to the tabular reports. Always renders off-screen."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "svg.hashsalt": "polycorpus",
}


def new_figure(width=6.0, height=None):
    golden = (math.sqrt(5) - 1.0) / 2.0
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, height or width * golden))
    return fig, ax


def save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path


def direction_counts(rows, path):
    """Horizontal bars of sentence-pair counts per direction."""
    rows = sorted(rows, key=lambda r: r[1])
    fig, ax = new_figure(6.0, max(2.0, 0.25 * len(rows) + 1.0))
    labels = [r[0] for r in rows]
    ax.barh(range(len(rows)), [r[1] for r in rows], color="#4c72b0")
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(labels)
    ax.set_xlabel("sentence pairs")
    return save(fig, path)


def shift_histogram(report, path, bins=40):
    """KS statistic distribution across rows, with flagged rows overlaid."""
    fig, ax = new_figure()
    flagged = set(report.shift_tokens)
    all_d = [d for _, d, _ in report.per_token]
    hit_d = [d for t, d, _ in report.per_token if t in flagged]
    ax.hist(all_d, bins=bins, range=(0, 1), color="#bbbbbb", label="all rows")
    if hit_d:
        ax.hist(hit_d, bins=bins, range=(0, 1), color="#c44e52", label=f"p < {report.alpha}")
    ax.set_xlabel("KS statistic D")
    ax.set_ylabel("rows")
    ax.legend(frameon=False)
    return save(fig, path)


def correlation_scatter(x, y, rho, path, xlabel="x", ylabel="y"):
    fig, ax = new_figure(4.5)
    ax.scatter(x, y, s=12, color="#4c72b0")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(f"Spearman rho = {rho:.3f}")
    return save(fig, path)


def retrieval_bars(report, path):
    fig, ax = new_figure(3.5)
    ax.bar(["mean cosine", "R@1"], [report.mean_cosine, report.r_at_1], color=["#55a868", "#4c72b0"])
    ax.set_ylim(min(0.0, report.mean_cosine), 1.0)
    return save(fig, path)


def fertility_bars(reports, path):
    fig, ax = new_figure(max(3.0, 0.5 * len(reports) + 2))
    ax.bar([r.lang for r in reports], [r.fertility for r in reports], color="#8172b2")
    ax.set_ylabel("tokens per unit")
    return save(fig, path)
