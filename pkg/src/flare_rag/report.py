"""Sweep reports: delimited records plus rendered figures.

The CSV is the stable interchange surface: fixed header, three-decimal
accuracy, one-decimal mean steps, records sorted by (policy, alpha).
Figures (accuracy vs alpha, steps vs alpha, and the accuracy/cost curve)
are rendered to files next to it for quick reading; they carry no data the
CSV and per-query log do not.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import EvalRecord, format_alpha

CSV_COLUMNS = ("policy", "alpha", "accuracy", "mean_steps", "total_steps", "n")


def format_record_row(record: EvalRecord) -> str:
    alpha = "" if record.alpha is None else format_alpha(record.alpha)
    return (
        f"{record.policy},{alpha},{record.accuracy:.3f},"
        f"{record.mean_steps:.1f},{record.total_steps},{record.n}"
    )


def write_sweep_csv(records: Iterable[EvalRecord], path: str | Path) -> Path:
    path = Path(path)
    ordered = sorted(records, key=lambda r: (r.policy, -1.0 if r.alpha is None else r.alpha))
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(format_record_row(record) for record in ordered)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_query_log(rows: Iterable[dict], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")
    return path


def write_records_json(records: Sequence[EvalRecord], path: str | Path) -> Path:
    """Full records including the per-origin breakdown the CSV leaves out."""
    path = Path(path)
    payload = [
        {
            "policy": r.policy,
            "alpha": r.alpha,
            "accuracy": r.accuracy,
            "mean_steps": r.mean_steps,
            "total_steps": r.total_steps,
            "n": r.n,
            "per_origin": {
                origin: {
                    "accuracy": o.accuracy,
                    "mean_steps": o.mean_steps,
                    "total_steps": o.total_steps,
                    "n": o.n,
                }
                for origin, o in r.per_origin.items()
            },
        }
        for r in records
    ]
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def render_sweep_figures(
    records: Sequence[EvalRecord],
    out_dir: str | Path,
    baselines: Sequence[EvalRecord] = (),
) -> list[Path]:
    """Render the three sweep figures; returns the written paths.

    records: the alpha sweep (rows with alpha set). baselines: optional
    static-policy rows drawn as reference lines / points.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep = sorted((r for r in records if r.alpha is not None), key=lambda r: r.alpha)
    alphas = [r.alpha for r in sweep]
    written: list[Path] = []

    fig, ax = _new_axes("alpha", "accuracy")
    ax.plot(alphas, [r.accuracy for r in sweep], marker="o", color="tab:blue")
    for baseline in baselines:
        ax.axhline(baseline.accuracy, linestyle="--", linewidth=1, alpha=0.7, label=baseline.policy)
    if baselines:
        ax.legend(fontsize=8)
    fig.tight_layout()
    target = out_dir / "accuracy_vs_alpha.png"
    fig.savefig(target)
    plt.close(fig)
    written.append(target)

    fig, ax = _new_axes("alpha", "mean retrieval steps")
    ax.plot(alphas, [r.mean_steps for r in sweep], marker="o", color="tab:orange")
    for baseline in baselines:
        ax.axhline(baseline.mean_steps, linestyle="--", linewidth=1, alpha=0.7, label=baseline.policy)
    if baselines:
        ax.legend(fontsize=8)
    fig.tight_layout()
    target = out_dir / "steps_vs_alpha.png"
    fig.savefig(target)
    plt.close(fig)
    written.append(target)

    fig, ax = _new_axes("mean retrieval steps", "accuracy")
    ax.plot([r.mean_steps for r in sweep], [r.accuracy for r in sweep], marker="o", color="tab:green")
    for record in sweep:
        ax.annotate(
            format_alpha(record.alpha),
            (record.mean_steps, record.accuracy),
            textcoords="offset points",
            xytext=(4, 4),
            fontsize=7,
        )
    for baseline in baselines:
        ax.scatter([baseline.mean_steps], [baseline.accuracy], marker="x", label=baseline.policy)
    if baselines:
        ax.legend(fontsize=8)
    fig.tight_layout()
    target = out_dir / "accuracy_vs_cost.png"
    fig.savefig(target)
    plt.close(fig)
    written.append(target)
    return written
