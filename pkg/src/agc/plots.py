"""Figure rendering for CLI reports. Imported lazily; always headless."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_DPI = 150


def save_diagnostic_histograms(per_condition: dict, path) -> None:
    """2x2 histogram panel of dev / rel / s_corr / beta, overlaid per condition."""
    fields = ["dev", "rel_rescaled", "s_corr", "beta"]
    fig, axes = plt.subplots(2, 2, figsize=(8, 6))
    for ax, field in zip(axes.ravel(), fields):
        for label, diags in per_condition.items():
            values = [getattr(d, field) for d in diags]
            if values:
                ax.hist(values, bins=40, alpha=0.55, label=label)
        ax.set_xlabel(field)
        ax.set_ylabel("samples")
    handles, labels = axes[0, 0].get_legend_handles_labels()
    if handles:
        fig.legend(handles, labels, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_beta_heatmap(grid: list[float], rows: list[dict], path) -> None:
    """Heatmap of (Acc+Rob)/2 over the conservative/aggressive step grid."""
    n = len(grid)
    combined = np.full((n, n), np.nan)
    index = {round(v, 9): i for i, v in enumerate(grid)}
    for row in rows:
        combined[index[round(row["beta_adv"], 9)], index[round(row["beta_clean"], 9)]] = row["combined"]
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    extent = (grid[0], grid[-1], grid[0], grid[-1])
    im = ax.imshow(combined, origin="lower", extent=extent, aspect="auto", cmap="viridis")
    ax.set_xlabel("beta_clean")
    ax.set_ylabel("beta_adv")
    ax.set_title("(clean + robust) / 2 accuracy")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_step_sweep(rows: list[dict], path) -> None:
    """Clean and robust accuracy versus the fixed step scale."""
    betas = [r["beta"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.plot(betas, [r["clean_accuracy"] for r in rows], marker="o", label="clean")
    ax.plot(betas, [r["robust_accuracy"] for r in rows], marker="s", label="robust")
    ax.set_xlabel("fixed step scale")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_views_sweep(rows: list[dict], path) -> None:
    """Clean and robust accuracy versus the number of views used."""
    ns = [r["n_views"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.plot(ns, [r["clean_accuracy"] for r in rows], marker="o", label="clean")
    ax.plot(ns, [r["robust_accuracy"] for r in rows], marker="s", label="robust")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("views per sample")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_score_scatter(rows: list, r_value: float | None, path) -> None:
    """Scatter of augmentation score against robust accuracy, with a fit line."""
    xs = np.array([row.mean_score for row in rows], dtype=np.float64)
    ys = np.array([row.robust_accuracy for row in rows], dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.scatter(xs, ys, zorder=3)
    for row in rows:
        ax.annotate(row.name, (row.mean_score, row.robust_accuracy), fontsize=8,
                    textcoords="offset points", xytext=(4, 4))
    if xs.size >= 2 and np.ptp(xs) > 0:
        slope, intercept = np.polyfit(xs, ys, 1)
        line_x = np.array([xs.min(), xs.max()])
        ax.plot(line_x, slope * line_x + intercept, color="gray", linestyle="--", zorder=2)
    title = "augmentation score vs robust accuracy"
    if r_value is not None:
        title += f" (r = {r_value:.3f})"
    ax.set_title(title)
    ax.set_xlabel("mean first-order margin change")
    ax.set_ylabel("robust accuracy")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
