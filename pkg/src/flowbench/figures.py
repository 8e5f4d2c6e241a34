"""Report figures rendered to files next to the delimited output."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_VARIANTS = (
    ("regular", False, "regular / clean", "#4878d0"),
    ("regular", True, "regular / attacked", "#d65f5f"),
    ("adversarial", False, "adversarial / clean", "#6acc64"),
    ("adversarial", True, "adversarial / attacked", "#ee854a"),
)


def render_f1_bars(report, path: str | Path) -> Path:
    """Grouped F1 bars: one group per model kind, one bar per
    training/attack variant."""
    kinds = []
    for r in report.rows:
        if r.model_kind not in kinds:
            kinds.append(r.model_kind)
    x = np.arange(len(kinds))
    width = 0.2
    fig, ax = plt.subplots(figsize=(max(6.0, 1.9 * len(kinds)), 4.0))
    for i, (training, attacked, label, color) in enumerate(_VARIANTS):
        values = [100.0 * report.row(k, training, attacked).metrics.f1s for k in kinds]
        ax.bar(x + (i - 1.5) * width, values, width, label=label, color=color)
    ax.set_xticks(x)
    ax.set_xticklabels(kinds, rotation=15)
    ax.set_ylabel("F1 score (%)")
    ax.set_ylim(0, 105)
    ax.set_title(f"F1 by model, training mode, and attack ({report.dataset})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_attack_decay(report, path: str | Path) -> Path:
    """Still-detected malicious counts per attack iteration, one line per
    attacked model."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for model_id, trace in sorted(report.traces.items()):
        detected = [trace["initial_detected"]] + [r["detected"] for r in trace["iterations"]]
        ax.plot(range(len(detected)), detected, marker="o", markersize=3, label=model_id)
    ax.set_xlabel("attack iteration")
    ax.set_ylabel("malicious samples still detected")
    ax.set_title(f"Evasion progress ({report.dataset})")
    if report.traces:
        ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report_figures(report, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        render_f1_bars(report, out_dir / "f1_scores.png"),
        render_attack_decay(report, out_dir / "attack_decay.png"),
    ]
