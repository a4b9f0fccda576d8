"""Figure rendering for analysis reports.

Histograms plus ECDF step plots replace the density curves; figures are
written as SVG (or any matplotlib-supported format) next to the delimited
outputs.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import AnalysisReport, CONFUSION_LABELS, ChiSquareResult, OutcomeClass

OUTCOME_COLORS = {
    OutcomeClass.TP: "tab:blue",
    OutcomeClass.FP: "tab:green",
    OutcomeClass.FN: "tab:red",
}


def plot_distance_distributions(report: AnalysisReport, path, log_scale=False):
    fig, (ax_hist, ax_ecdf) = plt.subplots(1, 2, figsize=(10, 4))
    samples = {
        c: (
            [math.log(d) for d in report.outcome_distances.distances[c]]
            if log_scale
            else report.outcome_distances.distances[c]
        )
        for c in OutcomeClass
    }
    nonempty = {c: s for c, s in samples.items() if s}
    if nonempty:
        all_values = [v for s in nonempty.values() for v in s]
        bins = np.histogram_bin_edges(all_values, bins="auto")
        for c, s in nonempty.items():
            ax_hist.hist(
                s, bins=bins, alpha=0.45, label=c.value, color=OUTCOME_COLORS[c]
            )
            xs = np.sort(s)
            ys = np.arange(1, len(xs) + 1) / len(xs)
            ax_ecdf.step(xs, ys, where="post", label=c.value, color=OUTCOME_COLORS[c])
    xlabel = "log token distance" if log_scale else "token distance"
    ax_hist.set_xlabel(xlabel)
    ax_hist.set_ylabel("count")
    ax_hist.set_title("Anaphor-antecedent distances by outcome")
    ax_ecdf.set_xlabel(xlabel)
    ax_ecdf.set_ylabel("ECDF")
    ax_ecdf.set_title("Empirical CDFs")
    if nonempty:
        ax_hist.legend()
        ax_ecdf.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_residuals(result: ChiSquareResult, path):
    residuals = result.residuals
    fig, ax = plt.subplots(
        figsize=(max(6, 0.8 * residuals.shape[1]), 2 + 0.8 * residuals.shape[0])
    )
    limit = max(1.0, float(np.abs(residuals).max()))
    im = ax.imshow(residuals, cmap="RdBu_r", vmin=-limit, vmax=limit)
    ax.set_xticks(range(len(result.col_labels)))
    ax.set_xticklabels(result.col_labels, rotation=45, ha="right")
    ax.set_yticks(range(len(result.row_labels)))
    ax.set_yticklabels(result.row_labels)
    for i in range(residuals.shape[0]):
        for j in range(residuals.shape[1]):
            ax.text(
                j, i, f"{residuals[i, j]:.2f}", ha="center", va="center", fontsize=8
            )
    ax.set_title(
        f"Pearson residuals (chi2={result.statistic:.3f}, df={result.df}, "
        f"p={result.p_value:.3g})"
    )
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_confusion(matrix: np.ndarray, path):
    fig, ax = plt.subplots(figsize=(9, 8))
    im = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(len(CONFUSION_LABELS)))
    ax.set_xticklabels(CONFUSION_LABELS, rotation=45, ha="right")
    ax.set_yticks(range(len(CONFUSION_LABELS)))
    ax.set_yticklabels(CONFUSION_LABELS)
    ax.set_xlabel("predicted label")
    ax.set_ylabel("gold label")
    threshold = matrix.max() / 2 if matrix.max() else 1
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            if matrix[i, j]:
                ax.text(
                    j,
                    i,
                    str(matrix[i, j]),
                    ha="center",
                    va="center",
                    fontsize=8,
                    color="white" if matrix[i, j] > threshold else "black",
                )
    ax.set_title("Subtype confusion")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def export_distances_csv(report: AnalysisReport, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["outcome", "distance", "log_distance"])
        for c in OutcomeClass:
            for d in report.outcome_distances.distances[c]:
                writer.writerow([c.value, d, f"{math.log(d):.6f}"])


def export_confusion_csv(matrix: np.ndarray, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["gold\\pred"] + CONFUSION_LABELS)
        for label, row in zip(CONFUSION_LABELS, matrix):
            writer.writerow([label] + [int(v) for v in row])


def render_report_figures(report: AnalysisReport, outdir, fmt="svg") -> list[Path]:
    """Render all applicable figures and CSV exports; returns written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    path = outdir / f"distance_distributions.{fmt}"
    plot_distance_distributions(report, path)
    written.append(path)
    log_path = outdir / f"distance_distributions_log.{fmt}"
    plot_distance_distributions(report, log_path, log_scale=True)
    written.append(log_path)
    csv_path = outdir / "distances.csv"
    export_distances_csv(report, csv_path)
    written.append(csv_path)

    if isinstance(report.chi_square, ChiSquareResult):
        path = outdir / f"chi_square_residuals.{fmt}"
        plot_residuals(report.chi_square, path)
        written.append(path)
    if report.confusion is not None:
        path = outdir / f"subtype_confusion.{fmt}"
        plot_confusion(report.confusion, path)
        written.append(path)
        csv_path = outdir / "subtype_confusion.csv"
        export_confusion_csv(report.confusion, csv_path)
        written.append(csv_path)
    return written
