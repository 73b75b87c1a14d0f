"""Figures for campaign reports: estimates with error bars against the limits."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def plot_report(report: dict, path: str | Path, dpi: int = 120):
    """One point per row: estimate with its z-sigma bar, limit as a hollow marker."""
    rows = report["rows"]
    labels = [f"{r['quantity']}  n={r['n']}" for r in rows]
    y = list(range(len(rows)))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7.0, 0.9 + 0.35 * max(len(rows), 1)))
        est = [r["estimate"] for r in rows]
        err = [r["ci_high"] - r["estimate"] for r in rows]
        colors = ["tab:gray" if r["pass"] is None else ("tab:blue" if r["pass"] else "tab:red") for r in rows]
        for yi, e, h, c in zip(y, est, err, colors):
            ax.errorbar(e, yi, xerr=h, fmt="o", color=c, ms=4, capsize=3)
        lim = [(yi, r["limit"]) for yi, r in zip(y, rows) if r["limit"] is not None]
        if lim:
            ax.plot([v for _, v in lim], [yi for yi, _ in lim], "D", mfc="none", mec="k", ms=6, label="limit")
            ax.legend(loc="best", frameon=False)
        ax.set_yticks(y)
        ax.set_yticklabels(labels)
        ax.invert_yaxis()
        ax.set_xlabel("estimate")
        ax.set_title(f"{report['config']['kind']} ({report['config']['matrix']})")
        fig.tight_layout()
        # no timestamps in the file, so reruns give identical bytes
        fig.savefig(path, dpi=dpi, metadata={"Software": None})
        plt.close(fig)
