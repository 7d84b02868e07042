"""Analytics report rendering: delimited files plus matplotlib figures.

The analyze path writes a CSV next to each figure so downstream tooling
gets machine-readable rows while humans get the chart.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .log_engine import InfluenceEdge


def write_user_stats_report(stats: dict[str, dict[str, int]], out_dir: str | Path) -> list[Path]:
    """Write users.csv plus per-author execution and commit bar charts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    authors = sorted(stats)

    csv_path = out / "users.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["author", "executions", "commits"])
        for author in authors:
            writer.writerow([author, stats[author]["executions"], stats[author]["commits"]])

    written = [csv_path]
    for kind, filename, title in (
        ("executions", "executions.png", "Prompt executions per author"),
        ("commits", "commits.png", "Prompt commits per author"),
    ):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(authors) + 1.5), 3.2))
        values = [stats[a][kind] for a in authors]
        ax.bar(range(len(authors)), values, color="#4878a8")
        ax.set_xticks(range(len(authors)))
        ax.set_xticklabels(authors, rotation=45, ha="right", fontsize=8)
        ax.set_ylabel(kind)
        ax.set_title(title)
        ax.spines["right"].set_visible(False)
        ax.spines["top"].set_visible(False)
        fig.tight_layout()
        path = out / filename
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def write_influence_report(
    edges: list[InfluenceEdge], orphans: list[str], out_dir: str | Path
) -> list[Path]:
    """Write influence.csv plus a stacked bar chart of edges per source prompt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    csv_path = out / "influence.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source_prompt", "target_prompt", "verbatim"])
        for edge in edges:
            writer.writerow([edge.source_prompt, edge.target, str(edge.verbatim).lower()])
        for orphan in orphans:
            writer.writerow(["", orphan, ""])

    sources = sorted({e.source_prompt for e in edges})
    tailored = [sum(1 for e in edges if e.source_prompt == s and not e.verbatim) for s in sources]
    verbatim = [sum(1 for e in edges if e.source_prompt == s and e.verbatim) for s in sources]

    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(sources) + 1.5), 3.2))
    ax.bar(range(len(sources)), tailored, color="#4878a8", label="tailored")
    ax.bar(range(len(sources)), verbatim, bottom=tailored, color="#d1615d", label="verbatim clone")
    ax.set_xticks(range(len(sources)))
    ax.set_xticklabels(sources, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("lesson prompts influenced")
    ax.set_title("Textbook-prompt influence on lesson prompts")
    ax.legend(fontsize=8)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    figure_path = out / "influence.png"
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)
    return [csv_path, figure_path]
