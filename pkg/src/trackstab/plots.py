"""Figure rendering for CLI reports.

Every command that writes delimited output also renders a matplotlib
figure next to it.  The Agg backend is forced so rendering works
headless, and PNG metadata is pinned for byte-stable output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import MetricsReport

_SAVE_KW = dict(dpi=120, metadata={"Software": "trackstab"})


def save_metrics_figure(
    after: MetricsReport,
    path: str | Path,
    before: MetricsReport | None = None,
    title: str = "per-frame metrics",
) -> Path:
    """Per-frame SSIM and MSE curves, optionally before vs after."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, (ax_ssim, ax_mse) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    frames = [r[0] for r in after.per_frame]
    if before is not None:
        ax_ssim.plot(frames, [r[2] for r in before.per_frame], "o-", color="#bbbbbb",
                     label="before", markersize=3)
        ax_mse.plot(frames, [r[1] for r in before.per_frame], "o-", color="#bbbbbb",
                    label="before", markersize=3)
    ax_ssim.plot(frames, [r[2] for r in after.per_frame], "o-", color="#2a6fbb",
                 label="after", markersize=3)
    ax_mse.plot(frames, [r[1] for r in after.per_frame], "o-", color="#bb4a2a",
                label="after", markersize=3)
    ax_ssim.set_ylabel("SSIM vs reference")
    ax_mse.set_ylabel("MSE vs reference")
    ax_mse.set_xlabel("frame")
    ax_ssim.set_title(title)
    for ax in (ax_ssim, ax_mse):
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def save_gridsweep_figure(
    rows: list[tuple[int, float, float]], path: str | Path
) -> Path:
    """SSIM and MSE means as functions of grid size (log2 x-axis)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sizes = [r[0] for r in rows]
    mses = [r[1] for r in rows]
    ssims = [r[2] for r in rows]
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(sizes, ssims, "o-", color="#2a6fbb", label="SSIM mean")
    ax1.set_xlabel("grid size (points per side)")
    ax1.set_ylabel("SSIM mean", color="#2a6fbb")
    ax1.set_xscale("log", base=2)
    ax1.grid(True, alpha=0.3)
    ax2 = ax1.twinx()
    ax2.plot(sizes, mses, "s--", color="#bb4a2a", label="MSE mean")
    ax2.set_ylabel("MSE mean", color="#bb4a2a")
    ax1.set_title("stabilization quality vs track grid size")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def save_energy_figure(traces: dict[int, list[float]], path: str | Path) -> Path:
    """Registration energy traces, one line per frame."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for frame_index in sorted(traces):
        trace = traces[frame_index]
        ax.plot(range(len(trace)), trace, alpha=0.7, label=f"frame {frame_index}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy")
    ax.set_title("registration energy traces")
    ax.grid(True, alpha=0.3)
    if len(traces) <= 12:
        ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path
