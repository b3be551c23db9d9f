"""Report figures rendered alongside the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .raster import rgb565_to_rgb888


def save_sweep_figure(path, rows: list[dict], kind: str) -> None:
    """Loss-rate curve over the swept parameter."""
    xs = [r["parameter"] for r in rows]
    ys = [r["frame_loss_rate"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, "o-", color="#27496d")
    ax.set_xlabel({"rssi": "RSSI (dB)", "distance": "distance (m)",
                   "snr": "SNR (dB)"}.get(kind, kind))
    ax.set_ylabel("frame loss rate")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(alpha=0.3)
    ax.set_title(f"frame loss vs {kind}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_timeline_figure(path, timeline: list[tuple[float, float]],
                         rates_bps: list[float]) -> None:
    t = np.array([p[0] for p in timeline]) / 3600.0
    b = np.array([p[1] for p in timeline]) / 1024.0
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(t, b, color="#27496d", lw=1.2)
    ax.set_xlabel("time (hours)")
    ax.set_ylabel("backlog (KB)")
    ax.set_title(f"broadcast backlog, {sum(rates_bps)/1000:.0f} kbps aggregate")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_rx_figure(path, rx_result) -> None:
    """Received page next to its column-loss map."""
    page = rx_result.page
    gapped = rx_result.gapped
    rgb = rgb565_to_rgb888(page.pixels)
    preview_h = min(page.height_px, 1400)
    fig, (ax0, ax1) = plt.subplots(
        2, 1, figsize=(7, 9), height_ratios=[8, 1], sharex=True)
    ax0.imshow(rgb[:preview_h], aspect="auto", interpolation="nearest")
    ax0.set_ylabel("px")
    loss = rx_result.report.frame_loss_rate
    ax0.set_title(f"received page ({loss:.1%} frame loss, "
                  f"{len(gapped.missing_columns)} columns repaired)")
    mask = np.zeros((1, page.width_px))
    if gapped.missing_columns:
        mask[0, np.asarray(gapped.missing_columns)] = 1.0
    ax1.imshow(mask, aspect="auto", cmap="Reds", vmin=0, vmax=1,
               interpolation="nearest")
    ax1.set_yticks([])
    ax1.set_xlabel("column (red = repaired)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
