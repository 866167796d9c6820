"""Figures for the detection report."""
from __future__ import annotations

import datetime as dt

import matplotlib

matplotlib.use("Agg")
import matplotlib.dates as mdates  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402

from .skyline import Label, SkylineConfig  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "tamine",
}

LABEL_COLORS = {Label.FEW: "#d62728", Label.MEDIUM: "#ffbf00", Label.MANY: "#2ca02c"}


def _utc(ts):
    return dt.datetime.fromtimestamp(ts, tz=dt.timezone.utc)


def render_skyline(detection, cfg: SkylineConfig, path, title=None) -> None:
    """Per-bin pattern fraction with the FEW/MANY thresholds and a label band."""
    with plt.rc_context(STYLE):
        fig, (ax, band) = plt.subplots(
            2, 1, figsize=(10, 3.6), sharex=True, gridspec_kw={"height_ratios": [4, 1]})
        bins = detection.bins
        xs = [_utc(b.interval.start) for b in bins] + [_utc(bins[-1].interval.end)]
        ys = [b.fraction for b in bins]
        ax.stairs(ys, xs, color="#1f77b4", linewidth=1.2, label="pattern fraction")
        ax.axhline(cfg.few_threshold, color=LABEL_COLORS[Label.FEW], linestyle="--", linewidth=0.8,
                   label=f"FEW < {cfg.few_threshold:g}")
        ax.axhline(cfg.many_threshold, color=LABEL_COLORS[Label.MANY], linestyle="--",
                   linewidth=0.8, label=f"MANY >= {cfg.many_threshold:g}")
        for a in detection.anomalies:
            ax.axvspan(_utc(a.start), _utc(a.end), color=LABEL_COLORS[Label.FEW], alpha=0.12)
        ax.set_ylim(0, max([cfg.many_threshold * 1.5, *ys]) * 1.05)
        ax.set_ylabel("fraction of library")
        ax.legend(loc="upper right", frameon=False, ncol=3)
        ax.set_title(title or f"skyline for {detection.subject_id}")

        for s in detection.intervals:
            band.axvspan(_utc(s.interval.start), _utc(s.interval.end),
                         color=LABEL_COLORS[s.label], linewidth=0)
        band.set_yticks([])
        band.set_ylabel("label", rotation=0, ha="right", va="center")
        band.xaxis.set_major_formatter(mdates.DateFormatter("%m-%d %H:%M", tz=dt.timezone.utc))
        fig.autofmt_xdate()
        fig.tight_layout()
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
