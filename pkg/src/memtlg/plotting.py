"""Figure rendering for waveforms and cost reports (Agg backend, file output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import CostReport  # noqa: E402
from .solver import Waveform  # noqa: E402


def save_waveform_plot(waveform: Waveform, path, title: str = "", channels=None) -> None:
    names = list(channels) if channels else list(waveform.channels)
    times = waveform.times()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name in names:
        ax.plot(times, waveform.channels[name], label=name, linewidth=1.2)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("volts / state")
    if title:
        ax.set_title(title)
    if names:
        ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_vector_traces_plot(
    vectors: list[str],
    pre: dict[str, list[float]],
    post: dict[str, list[float]],
    path,
    title: str = "",
) -> None:
    """Per-output staircase traces over the input-vector sequence.

    ``pre`` carries the column-line voltages before restoration, ``post``
    the thresholded rails, one list entry per vector.
    """
    outputs = sorted(pre)
    n = max(1, len(outputs))
    fig, axes = plt.subplots(n, 1, figsize=(8, 2.2 * n), sharex=True, squeeze=False)
    xs = range(len(vectors))
    for ax, name in zip(axes[:, 0], outputs):
        ax.step(xs, pre[name], where="mid", label="before block", color="tab:orange")
        ax.step(xs, post[name], where="mid", label="after block", color="tab:green")
        ax.set_ylabel(name)
        ax.set_ylim(-0.1, 1.15)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper right", fontsize=7)
    axes[-1, 0].set_xticks(list(xs))
    axes[-1, 0].set_xticklabels(vectors, rotation=90, fontsize=7)
    axes[-1, 0].set_xlabel("input vector")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_cost_plot(area: CostReport, power: CostReport, path, title: str = "") -> None:
    fig, (ax_a, ax_p) = plt.subplots(1, 2, figsize=(9, 3.8))
    for ax, report, label in ((ax_a, area, "area (um^2)"), (ax_p, power, "power (uW)")):
        kinds = list(report.subtotals_nano)
        scale = 1e6 if report.unit == "um^2" else 1e3
        values = [report.subtotals_nano[k] / scale for k in kinds]
        ax.barh(kinds, values, color="tab:blue")
        ax.set_xlabel(label)
        ax.grid(True, axis="x", alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
