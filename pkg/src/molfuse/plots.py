"""Optional SVG report figures (metric-vs-noise lines, Pearson box plots)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .pipeline import MetricsRow

__all__ = ["noise_curves_svg", "pearson_box_svg"]


def noise_curves_svg(rows: list[MetricsRow], metric: str, path: str | Path) -> None:
    """One line per method: mean metric value against the noise ratio."""
    by_method: dict[str, dict[float, list[float]]] = {}
    for r in rows:
        by_method.setdefault(r.method, {}).setdefault(r.noise_ratio, []).append(getattr(r, metric))
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, points in sorted(by_method.items()):
        ratios = sorted(points)
        means = [sum(points[x]) / len(points[x]) for x in ratios]
        ax.plot(ratios, means, marker="o", label=method)
    ax.set_xlabel("noise ratio")
    ax.set_ylabel(metric)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def pearson_box_svg(rows: list[MetricsRow], path: str | Path) -> None:
    """Per-method distribution of clean-input Pearson values over seeds."""
    by_method: dict[str, list[float]] = {}
    for r in rows:
        if r.noise_ratio == 0.0:
            by_method.setdefault(r.method, []).append(r.pearson)
    methods = sorted(by_method)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.boxplot([by_method[m] for m in methods], tick_labels=methods)
    ax.set_ylabel("pearson")
    ax.tick_params(axis="x", rotation=45, labelsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
