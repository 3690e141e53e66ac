"""Figure rendering for the report paths.

Every CLI subcommand that emits a report also renders a matplotlib figure
next to the delimited output (disable with --no-figures). Figures are a
convenience view; the CSV/JSON files remain the canonical outputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .importance import ImportanceReport
from .ml import EvaluationReport
from .preference import (TREND_DECREASE, TREND_INCREASE, PreferenceMatrix,
                         TrendMark)
from .survival import SurvivalReport

_TREND_COLORS = {TREND_INCREASE: "tab:blue", TREND_DECREASE: "tab:red"}


def plot_preference_matrices(matrices: Mapping[int, PreferenceMatrix],
                             marks: Sequence[TrendMark], path: str | Path) -> Path:
    """Heatmap per semester; cell borders colored by the trend since the prior semester."""
    semesters = sorted(matrices)
    marks_by = {(m.to_semester, m.row_value, m.col_value): m.mark for m in marks}
    fig, axes = plt.subplots(1, len(semesters), figsize=(4.2 * len(semesters), 4.0),
                             squeeze=False)
    for ax, semester in zip(axes[0], semesters):
        matrix = matrices[semester]
        grid = np.asarray(matrix.means)
        image = ax.imshow(grid, vmin=0.0, vmax=1.0, cmap="RdYlBu_r")
        ax.set_xticks(range(len(matrix.values)), matrix.values, rotation=45, ha="right")
        ax.set_yticks(range(len(matrix.row_values)), matrix.row_values)
        ax.set_title(f"semester {semester}")
        for i, row_value in enumerate(matrix.row_values):
            for j, col_value in enumerate(matrix.values):
                ax.text(j, i, f"{grid[i, j]:.2f}", ha="center", va="center", fontsize=8)
                mark = marks_by.get((semester, row_value, col_value))
                color = _TREND_COLORS.get(mark)
                if color:
                    ax.add_patch(plt.Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False,
                                               edgecolor=color, linewidth=2.0))
    fig.suptitle(f"mean preference by own value: {matrices[semesters[0]].attribute}")
    fig.colorbar(image, ax=axes[0], shrink=0.8)
    return _save(fig, path)


def plot_roc(reports: Mapping[str, EvaluationReport], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 5.0))
    for kind in sorted(reports):
        report = reports[kind]
        if not report.roc:
            continue
        fpr = [p.fpr for p in report.roc]
        tpr = [p.tpr for p in report.roc]
        auc = f"{report.auc:.3f}" if report.auc is not None else "n/a"
        ax.plot(fpr, tpr, marker="", label=f"{kind} (AUC {auc})")
    ax.plot([0, 1], [0, 1], linestyle=":", color="gray", linewidth=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("ROC by classifier")
    ax.legend(loc="lower right", fontsize=8)
    return _save(fig, path)


def plot_importance(reports: Mapping[str, ImportanceReport], path: str | Path) -> Path:
    """Grouped horizontal bars of normalized weights, one group per feature."""
    cells = sorted(reports)
    features = reports[cells[0]].feature_names
    positions = np.arange(len(features), dtype=float)
    height = 0.8 / len(cells)
    fig, ax = plt.subplots(figsize=(7.0, 0.45 * len(features) + 1.5))
    for c, cell in enumerate(cells):
        weights = [row.weight for row in reports[cell].rows]
        ax.barh(positions + c * height, weights, height=height, label=cell)
    ax.set_yticks(positions + 0.4 - height / 2, features)
    ax.invert_yaxis()
    ax.set_xlabel("normalized weight")
    ax.set_title("attribute importance")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_survival(report: SurvivalReport, path: str | Path) -> Path:
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    semesters = [t.semester for t in report.transitions]
    left.plot(semesters, [t.strong_rate for t in report.transitions],
              marker="o", label="strong")
    left.plot(semesters, [t.weak_rate for t in report.transitions],
              marker="s", label="weak")
    left.set_xlabel("semester")
    left.set_ylabel("survival rate")
    left.set_ylim(0, 1)
    left.set_title(f"edge survival (threshold {report.threshold})")
    left.legend()
    right.plot([s.semester for s in report.strong_shares],
               [s.fraction for s in report.strong_shares], marker="o", label="all edges")
    right.plot([s.semester for s in report.aged_strong_shares],
               [s.fraction for s in report.aged_strong_shares], marker="s",
               label="edges >= 1 semester old")
    right.set_xlabel("semester")
    right.set_ylabel("strong-edge share")
    right.set_ylim(0, None)
    right.set_title("strong-edge share")
    right.legend()
    return _save(fig, path)


def plot_threshold_sweep(reports: Sequence[SurvivalReport], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    thresholds = [r.threshold for r in reports]
    gaps = []
    for report in reports:
        diffs = [t.strong_rate - t.weak_rate for t in report.transitions
                 if t.strong_rate is not None and t.weak_rate is not None]
        gaps.append(sum(diffs) / len(diffs) if diffs else np.nan)
    ax.plot(thresholds, gaps, marker="o")
    ax.set_xlabel("strength threshold")
    ax.set_ylabel("mean survival gap (strong - weak)")
    ax.set_title("threshold sweep")
    return _save(fig, path)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
