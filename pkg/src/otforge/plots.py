"""Figure rendering for corpus reports.

Writes the hardness histogram and the per-query component ratios as PNG files
next to the delimited report output. Headless-safe: the Agg backend is forced
before pyplot loads.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be fixed first)

from otforge.analysis import RATIO_COLUMNS, CorpusReport, HardnessCategory  # noqa: E402


def render_report_figures(report: CorpusReport, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    categories = [c.value for c in HardnessCategory]
    counts = [report.hardness_histogram.get(c, 0) for c in categories]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(categories, counts, color="#4878a8")
    ax.set_ylabel("queries")
    ax.set_title(f"Hardness distribution ({report.query_count} queries)")
    for x, c in enumerate(counts):
        ax.text(x, c, str(c), ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    path = out_dir / "hardness_histogram.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    values = [report.ratios.get(name, 0.0) for name in RATIO_COLUMNS]
    labels = [name.replace("_", " ") for name in RATIO_COLUMNS]
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.bar(labels, values, color="#6a9f58")
    ax.set_ylabel("mean per query")
    ax.set_title("Component ratios")
    ax.tick_params(axis="x", rotation=20)
    for x, v in enumerate(values):
        ax.text(x, v, f"{v:.2f}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    path = out_dir / "component_ratios.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    return written
