"""Skyline abstraction: label the timeline by how many normal patterns show up.

The timeline is cut into fixed-width bins.  For each bin the fraction of
library patterns having at least one instance envelope touching the bin is
computed and mapped to FEW / MEDIUM / MANY.  Runs of equally labelled bins
are merged; FEW runs are the anomaly candidates.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .abstraction import Interval
from .errors import ConfigError, EmptyLibraryError
from .mining import Pattern, PatternInstance


class Label(str, Enum):
    FEW = "FEW"
    MEDIUM = "MEDIUM"
    MANY = "MANY"


class CountMode(str, Enum):
    PATTERNS = "patterns"    # distinct library patterns present in the bin
    INSTANCES = "instances"  # raw instance count, capped at the library size


@dataclass(frozen=True)
class SkylineConfig:
    bin_seconds: int = 3600
    few_threshold: float = 0.10
    many_threshold: float = 0.30
    min_anomaly_duration: int = 0
    count: CountMode = CountMode.PATTERNS

    def __post_init__(self):
        object.__setattr__(self, "count", CountMode(self.count))
        if self.bin_seconds <= 0:
            raise ConfigError("bin_seconds must be positive")
        if not 0 <= self.few_threshold < self.many_threshold <= 1:
            raise ConfigError("need 0 <= few_threshold < many_threshold <= 1")
        if self.min_anomaly_duration < 0:
            raise ConfigError("min_anomaly_duration must be >= 0")

    def to_dict(self) -> dict:
        return {
            "bin_seconds": self.bin_seconds,
            "few_threshold": self.few_threshold,
            "many_threshold": self.many_threshold,
            "min_anomaly_duration": self.min_anomaly_duration,
            "count": self.count.value,
        }


@dataclass(frozen=True)
class SkylineBin:
    interval: Interval
    fraction: float
    label: Label
    present: frozenset[str]
    instance_count: int


@dataclass(frozen=True)
class SkylineInterval:
    interval: Interval
    label: Label
    fraction: float
    present_patterns: frozenset[str]


def _exact(x: float) -> Fraction:
    # thresholds are compared as the decimals they were written as
    return Fraction(repr(float(x)))


def label_for(fraction, cfg: SkylineConfig) -> Label:
    frac = fraction if isinstance(fraction, Fraction) else _exact(fraction)
    if frac < _exact(cfg.few_threshold):
        return Label.FEW
    if frac >= _exact(cfg.many_threshold):
        return Label.MANY
    return Label.MEDIUM


def bin_edges(timeline: Interval, width: int) -> list[Interval]:
    """Consecutive bins starting at ``timeline.start``; the last one is truncated."""
    if timeline.end <= timeline.start:
        raise ValueError(f"degenerate timeline {timeline}")
    edges = []
    t = timeline.start
    while t < timeline.end:
        edges.append(Interval(t, min(t + width, timeline.end)))
        t += width
    return edges


def skyline_bins(instances: Iterable[PatternInstance], library_size: int, timeline: Interval,
                 cfg: SkylineConfig,
                 pattern_ids: Mapping[Pattern, str] | None = None) -> list[SkylineBin]:
    if library_size < 1:
        raise EmptyLibraryError("the skyline needs at least one library pattern")
    edges = bin_edges(timeline, cfg.bin_seconds)
    present: list[set[str]] = [set() for _ in edges]
    counts = [0] * (len(edges) + 1)
    last = len(edges) - 1
    width = cfg.bin_seconds
    spans: dict[str, list[tuple[int, int]]] = {}
    for inst in instances:
        env = inst.envelope
        if env.end < timeline.start or env.start > timeline.end:
            continue
        pid = pattern_ids[inst.pattern] if pattern_ids is not None else str(inst.pattern)
        # bins are [start, end) except the last, which is closed
        first = max(0, (env.start - timeline.start) // width)
        stop = min(last, (env.end - timeline.start) // width)
        spans.setdefault(pid, []).append((first, stop))
        counts[first] += 1
        counts[stop + 1] -= 1
    for pid, ranges in spans.items():
        ranges.sort()
        hi = -1
        for first, stop in ranges:
            for b in range(max(first, hi + 1), stop + 1):
                present[b].add(pid)
            hi = max(hi, stop)
    running = 0
    for b in range(len(edges)):
        running += counts[b]
        counts[b] = running
    out = []
    for edge, pids, n in zip(edges, present, counts):
        if cfg.count is CountMode.PATTERNS:
            frac = Fraction(len(pids), library_size)
        else:
            frac = min(Fraction(n, library_size), Fraction(1))
        out.append(SkylineBin(edge, float(frac), label_for(frac, cfg), frozenset(pids), n))
    return out


def merge_bins(bins: Sequence[SkylineBin]) -> list[SkylineInterval]:
    """Maximal runs of equal label; fraction is the duration-weighted mean."""
    out: list[SkylineInterval] = []
    run: list[SkylineBin] = []

    def flush():
        span = Interval(run[0].interval.start, run[-1].interval.end)
        total = sum(b.interval.duration for b in run)
        if total:
            frac = sum(b.fraction * b.interval.duration for b in run) / total
        else:
            frac = run[0].fraction
        present = frozenset().union(*(b.present for b in run))
        out.append(SkylineInterval(span, run[0].label, frac, present))

    for b in bins:
        if run and b.label is not run[-1].label:
            flush()
            run = []
        run.append(b)
    if run:
        flush()
    return out


def skyline(instances: Iterable[PatternInstance], library_size: int, timeline: Interval,
            cfg: SkylineConfig,
            pattern_ids: Mapping[Pattern, str] | None = None) -> list[SkylineInterval]:
    return merge_bins(skyline_bins(instances, library_size, timeline, cfg, pattern_ids))


def detect_anomalies(intervals: Iterable[SkylineInterval], cfg: SkylineConfig) -> list[Interval]:
    return sorted(
        s.interval for s in intervals
        if s.label is Label.FEW and s.interval.duration >= cfg.min_anomaly_duration
    )


def iso(ts: int) -> str:
    return dt.datetime.fromtimestamp(ts, tz=dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


REPORT_COLUMNS = ("subject_id", "start", "end", "start_iso", "end_iso", "label", "fraction",
                  "patterns")
SERIES_COLUMNS = ("subject_id", "bin_start", "bin_end", "bin_start_iso", "fraction", "label",
                  "n_patterns", "n_instances")


def write_report(path, rows: Iterable[tuple[str, SkylineInterval]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for subject, s in rows:
            w.writerow((subject, s.interval.start, s.interval.end, iso(s.interval.start),
                        iso(s.interval.end), s.label.value, f"{s.fraction:.6f}",
                        ";".join(sorted(s.present_patterns))))


def write_series(path, rows: Iterable[tuple[str, SkylineBin]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for subject, b in rows:
            w.writerow((subject, b.interval.start, b.interval.end, iso(b.interval.start),
                        f"{b.fraction:.6f}", b.label.value, len(b.present), b.instance_count))
