"""State and gradient abstraction of raw samples into symbolic intervals.

Every stream is keyed by ``(subject, concept, kind)``.  Samples are first
turned into point or pair intervals carrying a symbol, then neighbouring
intervals with equal symbols are joined by :func:`interpolate` as long as
the hole between them is no wider than the concept's interpolation gap.
"""
from __future__ import annotations

import bisect
import math
import statistics
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, NamedTuple, Sequence

if TYPE_CHECKING:
    from .knowledge import ConceptDefinition


class Interval(NamedTuple):
    """Closed interval of integer epoch seconds."""

    start: int
    end: int

    @property
    def duration(self) -> int:
        return self.end - self.start

    def intersects(self, other: "Interval") -> bool:
        return self.start <= other.end and other.start <= self.end

    def contains(self, other: "Interval") -> bool:
        return self.start <= other.start and other.end <= self.end


class Kind(str, Enum):
    STATE = "STATE"
    GRADIENT = "GRADIENT"

    @property
    def suffix(self) -> str:
        # gradient streams carry the TREND suffix used for server metrics
        return "STATE" if self is Kind.STATE else "TREND"


INCREASING = "INCREASING"
DECREASING = "DECREASING"
SAME = "SAME"
GRADIENT_SYMBOLS = (INCREASING, DECREASING, SAME)


@dataclass(frozen=True, order=True)
class Sample:
    subject_id: str
    concept_id: str
    timestamp: int
    value: float


@dataclass(frozen=True, order=True)
class AbstractInterval:
    subject_id: str
    concept_id: str
    kind: Kind
    symbol: str
    interval: Interval

    @property
    def stream(self):
        return (self.subject_id, self.concept_id, self.kind)


def classify_value(value: float, definition: "ConceptDefinition") -> str:
    """Return the symbol of the half-open state bin holding ``value``."""
    if math.isnan(value):
        raise ValueError("cannot classify NaN")
    lowers = [b.lower for b in definition.state_bins]
    idx = bisect.bisect_right(lowers, value) - 1
    # -inf falls into the first bin and +inf into the last
    return definition.state_bins[max(idx, 0)].symbol


def default_max_gap(timestamps: Sequence[int]) -> float:
    """Twice the median sampling period; 1 s for streams with one sample."""
    if len(timestamps) < 2:
        return 1.0
    diffs = [b - a for a, b in zip(timestamps, timestamps[1:])]
    return max(2.0 * statistics.median(diffs), 1.0)


def _resolve_gap(samples, definition):
    if definition.max_interpolation_gap is not None:
        return definition.max_interpolation_gap
    return default_max_gap([s.timestamp for s in samples])


def _check_stream(samples: Sequence[Sample]):
    keys = {(s.subject_id, s.concept_id) for s in samples}
    if len(keys) > 1:
        raise ValueError(f"samples span several streams: {sorted(keys)}")
    for a, b in zip(samples, samples[1:]):
        if b.timestamp <= a.timestamp:
            raise ValueError("samples must be sorted by strictly increasing timestamp")


def abstract_state(samples: Sequence[Sample], definition: "ConceptDefinition",
                   max_gap: float | None = None) -> list[AbstractInterval]:
    if not samples:
        return []
    _check_stream(samples)
    gap = _resolve_gap(samples, definition) if max_gap is None else max_gap
    points = [
        AbstractInterval(s.subject_id, s.concept_id, Kind.STATE,
                         classify_value(s.value, definition),
                         Interval(s.timestamp, s.timestamp))
        for s in samples
    ]
    return interpolate(points, gap)


def gradient_symbol(slope: float, epsilon: float) -> str:
    if slope > epsilon:
        return INCREASING
    if slope < -epsilon:
        return DECREASING
    return SAME


def abstract_gradient(samples: Sequence[Sample], definition: "ConceptDefinition",
                      max_gap: float | None = None) -> list[AbstractInterval]:
    """Per-pair slope classification followed by interpolation.

    Pairs further apart than the interpolation gap are skipped, so a hole
    in the data never produces a trend interval bridging it.
    """
    if len(samples) < 2:
        return []
    _check_stream(samples)
    gap = _resolve_gap(samples, definition) if max_gap is None else max_gap
    eps = definition.gradient_epsilon
    pairs = []
    for a, b in zip(samples, samples[1:]):
        dt = b.timestamp - a.timestamp
        if dt > gap:
            continue
        symbol = gradient_symbol((b.value - a.value) / dt, eps)
        pairs.append(AbstractInterval(a.subject_id, a.concept_id, Kind.GRADIENT, symbol,
                                      Interval(a.timestamp, b.timestamp)))
    return interpolate(pairs, gap)


def interpolate(intervals: Iterable[AbstractInterval], max_gap: float) -> list[AbstractInterval]:
    """Join consecutive equal-symbol intervals separated by at most ``max_gap``."""
    items = sorted(intervals, key=lambda a: a.interval)
    if len({a.stream for a in items}) > 1:
        raise ValueError("interpolate expects a single (subject, concept, kind) stream")
    while True:
        out: list[AbstractInterval] = []
        for cur in items:
            if out:
                prev = out[-1]
                if prev.symbol == cur.symbol and cur.interval.start - prev.interval.end <= max_gap:
                    span = Interval(prev.interval.start, max(prev.interval.end, cur.interval.end))
                    out[-1] = AbstractInterval(prev.subject_id, prev.concept_id, prev.kind,
                                               prev.symbol, span)
                    continue
            out.append(cur)
        if len(out) == len(items):
            return out
        items = out
