"""Figures for benchmark reports (matplotlib, file output only)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .bench import CvReport

__all__ = ["plot_fold_costs"]


def plot_fold_costs(report: CvReport, path, title: str | None = None) -> Path:
    """Per-fold ``J_k`` of every method on a log axis, failed folds left out."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.ticker import MaxNLocator

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    markers = "osd^v<>"
    for n, (method, costs) in enumerate(report.costs.items()):
        k = np.arange(1, len(costs) + 1)
        c = np.array(costs, dtype=float)
        ok = np.isfinite(c) & (c > 0) & (np.array(report.status[method]) != "failed")
        ax.plot(k[ok], c[ok], marker=markers[n % len(markers)], ms=4, lw=1,
                label=f"{method} (mean {report.average(method):.3g})")
    ax.set_yscale("log")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set_xlabel("training fold k")
    ax.set_ylabel("J_k")
    cfg = report.config
    ax.set_title(title or f"{cfg.system}: sigma_S={cfg.sigma_S:g}, sigma_Y={cfg.sigma_Y:g}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
