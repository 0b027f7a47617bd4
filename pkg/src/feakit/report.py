"""Render evaluation and rollout figures to files beside the JSON/JSONL outputs."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport


def _bar_chart(ax, labels: list[str], values: list[float], title: str, ylabel: str):
    ax.bar(range(len(labels)), values, color="#4878cf")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(axis="y", alpha=0.3)


def save_eval_figures(report: EvalReport, outdir: str | Path) -> list[Path]:
    """Per-AU F1 and per-class accuracy bar charts; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if report.per_au_f1:
        fig, ax = plt.subplots(figsize=(max(6, 0.4 * len(report.per_au_f1)), 4))
        _bar_chart(ax, list(report.per_au_f1), list(report.per_au_f1.values()), "Per-AU F1", "F1")
        ax.axhline(report.per_au_f1_avg, color="#d65f5f", linestyle="--", label=f"avg {report.per_au_f1_avg:.3f}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = outdir / "au_f1.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    if report.per_class_accuracy:
        fig, ax = plt.subplots(figsize=(6, 4))
        _bar_chart(
            ax,
            list(report.per_class_accuracy),
            list(report.per_class_accuracy.values()),
            "Per-class emotion accuracy",
            "recall",
        )
        ax.axhline(report.macro_accuracy, color="#d65f5f", linestyle="--", label=f"macro {report.macro_accuracy:.3f}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = outdir / "class_accuracy.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    return written


def save_batch_figures(batch_path: str | Path, outdir: str | Path) -> list[Path]:
    """Histograms of reward totals and advantages from an exported training batch."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    totals: list[float] = []
    advantages: list[float] = []
    with Path(batch_path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            totals.append(float(row["total"]))
            advantages.append(float(row["advantage"]))
    if not totals:
        return []

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.hist(totals, bins=20, color="#4878cf")
    ax1.set_title("Reward totals")
    ax1.set_xlabel("total reward")
    ax2.hist(advantages, bins=20, color="#6acc65")
    ax2.set_title("Group-relative advantages")
    ax2.set_xlabel("advantage")
    for ax in (ax1, ax2):
        ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    path = outdir / "training_batch.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
