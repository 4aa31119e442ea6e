"""Report rendering: the grouped-bar summary SVG and matplotlib figures.

The summary chart is written as plain SVG so bar geometry is exact: bar
heights are accuracy times the plot height on a fixed 0..1 axis.  The
per-epoch curve figures go through matplotlib's Agg backend.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import ComparisonSummary, RunSummary

__all__ = [
    "render_summary_svg",
    "render_comparison_curves",
    "render_run_curves",
]

_COLORS = {"zeta": "#4c72b0", "adam": "#dd8452"}

_SVG_W = 640
_SVG_H = 400
_MARGIN_L = 60
_MARGIN_R = 20
_MARGIN_T = 40
_MARGIN_B = 60


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_summary_svg(summary: ComparisonSummary, path: str | Path) -> None:
    """Grouped-bar chart of final test accuracy, one group per condition,
    one bar per optimizer.  Output is standalone well-formed XML."""
    if not summary.conditions:
        raise ValueError("summary has no conditions to plot")

    plot_w = _SVG_W - _MARGIN_L - _MARGIN_R
    plot_h = _SVG_H - _MARGIN_T - _MARGIN_B
    x0, y0 = _MARGIN_L, _MARGIN_T
    groups = summary.conditions
    group_w = plot_w / len(groups)
    bar_w = group_w / 3.0

    parts: list[str] = []
    parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{_SVG_H}" viewBox="0 0 {_SVG_W} {_SVG_H}">'
    )
    parts.append("<title>Final test accuracy by optimizer</title>")
    parts.append(
        f'<rect x="0" y="0" width="{_SVG_W}" height="{_SVG_H}" fill="white"/>'
    )
    # axes and y grid (0 to 1, ticks every 0.2)
    axis_bottom = y0 + plot_h
    for i in range(6):
        frac = i / 5.0
        y = axis_bottom - frac * plot_h
        parts.append(
            f'<line x1="{x0}" y1="{y:.2f}" x2="{x0 + plot_w}" y2="{y:.2f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{y + 4:.2f}" font-size="12" '
            f'text-anchor="end" font-family="sans-serif">{frac:.1f}</text>'
        )
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{axis_bottom}" '
        'stroke="#333333" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{x0}" y1="{axis_bottom}" x2="{x0 + plot_w}" '
        f'y2="{axis_bottom}" stroke="#333333" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{x0 - 44}" y="{y0 + plot_h / 2:.2f}" font-size="13" '
        'font-family="sans-serif" transform="rotate(-90 '
        f'{x0 - 44} {y0 + plot_h / 2:.2f})" text-anchor="middle">'
        "test accuracy</text>"
    )

    for gi, cond in enumerate(groups):
        gx = x0 + gi * group_w
        for bi, run in enumerate((cond.zeta, cond.adam)):
            acc = run.final_test_accuracy
            h = acc * plot_h
            bx = gx + group_w / 2.0 + (bi - 1) * bar_w
            by = axis_bottom - h
            parts.append(
                f'<rect class="bar bar-{run.optimizer}" x="{bx:.2f}" '
                f'y="{by:.2f}" width="{bar_w:.2f}" height="{h:.2f}" '
                f'fill="{_COLORS[run.optimizer]}" data-accuracy="{acc:.6f}"/>'
            )
            parts.append(
                f'<text x="{bx + bar_w / 2:.2f}" y="{by - 4:.2f}" '
                'font-size="11" text-anchor="middle" '
                f'font-family="sans-serif">{acc:.3f}</text>'
            )
        parts.append(
            f'<text x="{gx + group_w / 2:.2f}" y="{axis_bottom + 18}" '
            'font-size="12" text-anchor="middle" font-family="sans-serif">'
            f"{_esc(cond.condition)}</text>"
        )

    # legend
    lx = x0 + 10
    for bi, name in enumerate(("zeta", "adam")):
        ly = y0 - 26 + bi * 0  # single row
        lx_item = lx + bi * 90
        parts.append(
            f'<rect class="legend-swatch" x="{lx_item}" y="{ly}" width="14" '
            f'height="14" fill="{_COLORS[name]}"/>'
        )
        parts.append(
            f'<text x="{lx_item + 20}" y="{ly + 11}" font-size="12" '
            f'font-family="sans-serif">{name}</text>'
        )
    parts.append("</svg>")

    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def render_comparison_curves(summary: ComparisonSummary, path: str | Path) -> None:
    """Per-epoch test accuracy and loss curves, both optimizers, all
    conditions, rendered to an image file via matplotlib."""
    if not summary.conditions:
        raise ValueError("summary has no conditions to plot")
    fig, (ax_acc, ax_loss) = plt.subplots(1, 2, figsize=(10, 4))
    styles = ["-", "--", "-.", ":"]
    for ci, cond in enumerate(summary.conditions):
        ls = styles[ci % len(styles)]
        for run in (cond.zeta, cond.adam):
            epochs = range(1, len(run.epoch_test_accuracy) + 1)
            label = f"{run.optimizer} ({cond.condition})"
            ax_acc.plot(
                epochs, run.epoch_test_accuracy, ls, color=_COLORS[run.optimizer],
                label=label,
            )
            ax_loss.plot(
                epochs, run.epoch_test_loss, ls, color=_COLORS[run.optimizer],
                label=label,
            )
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("test accuracy")
    ax_acc.grid(alpha=0.3)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("test loss")
    ax_loss.grid(alpha=0.3)
    ax_acc.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_run_curves(
    records, summary: RunSummary, path: str | Path
) -> None:
    """Single-run report figure: training loss per step plus the
    per-epoch test accuracy."""
    train_steps = [r.step for r in records if r.split == "train"]
    train_loss = [r.loss for r in records if r.split == "train"]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(train_steps, train_loss, color=_COLORS.get(summary.optimizer, "#333"))
    ax_loss.set_xlabel("step")
    ax_loss.set_ylabel("train loss")
    ax_loss.grid(alpha=0.3)
    epochs = range(1, len(summary.epoch_test_accuracy) + 1)
    ax_acc.plot(
        epochs, summary.epoch_test_accuracy, "o-",
        color=_COLORS.get(summary.optimizer, "#333"),
    )
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("test accuracy")
    ax_acc.grid(alpha=0.3)
    fig.suptitle(summary.run_id)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
