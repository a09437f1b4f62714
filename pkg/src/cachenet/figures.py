"""Figure rendering for sweep results (saved next to the CSV output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

_X_LABELS = {
    "tau_db": "SINR threshold (dB)",
    "rate_threshold": "rate threshold (bits/s)",
    "lambda2": "pico density (BSs per 250 m disk)",
    "M2": "pico cache size (files)",
    "N2": "pico antenna elements",
    "carrier": "carrier frequency (GHz)",
}


def render_curves(results, axis_kind: str, y_label: str, path: Path, title: str = "") -> Path:
    """Plot analytic lines and Monte Carlo error bars for a set of curves."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, res in enumerate(results):
        color = colors[i % len(colors)]
        if res.analytic_values is not None:
            ax.plot(res.axis, res.analytic_values, "-", color=color, label=f"{res.name} (analytic)")
        if res.mc_values is not None:
            ax.errorbar(
                res.axis,
                res.mc_values,
                yerr=res.mc_half_widths,
                fmt="o",
                markersize=3.5,
                capsize=2,
                linestyle="none",
                color=color,
                label=f"{res.name} (MC)",
            )
    if axis_kind == "rate_threshold":
        ax.set_xscale("log")
    ax.set_xlabel(_X_LABELS.get(axis_kind, axis_kind))
    ax.set_ylabel(y_label)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
