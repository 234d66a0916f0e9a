"""Figure rendering for experiment reports (headless, files only)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_report_figures(report, outdir: str) -> list[str]:
    """One PNG per named series; returns the written paths."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    for name, points in report.series.items():
        if not points:
            continue
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2)
        ax.set_title(f"{report.name}: {name.replace('_', ' ')}", fontsize=10)
        ax.set_xlabel("index" if name.startswith("identity") else "cycle / parameter")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        path = os.path.join(outdir, f"{report.name}__{name}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def write_report_csv(report, outdir: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{report.name}.csv")
    columns: list[str] = []
    for row in report.rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in report.rows:
            fh.write(",".join(str(row.get(c, "")) for c in columns) + "\n")
    return path


def write_report_summary(report, outdir: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{report.name}.txt")
    with open(path, "w") as fh:
        fh.write(report.summary() + "\n")
    return path
