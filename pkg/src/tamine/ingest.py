"""CSV ingestion of raw metric samples.

Input format: a header row ``subject_id,concept_id,timestamp,value`` followed
by one sample per row.  ``timestamp`` is either integer epoch seconds or an
ISO-8601 date-time (naive values are read as UTC).
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .abstraction import Interval, Sample
from .errors import FormatError

log = logging.getLogger(__name__)

HEADER = ("subject_id", "concept_id", "timestamp", "value")


def parse_timestamp(text: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return int(float(text))
    except (ValueError, OverflowError):
        pass
    try:
        return _parse_iso(text)
    except ValueError:
        raise ValueError(f"bad timestamp {text!r}") from None


def _parse_iso(text: str) -> int:
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    stamp = dt.datetime.fromisoformat(text)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return int(stamp.timestamp())


@dataclass
class SampleSet:
    """Validated samples grouped per ``(subject, concept)`` stream, sorted by time."""

    streams: dict[tuple[str, str], list[Sample]] = field(default_factory=dict)
    unknown_concepts: dict[str, int] = field(default_factory=dict)
    duplicates: int = 0
    non_finite: int = 0

    def __len__(self):
        return sum(len(v) for v in self.streams.values())

    @property
    def subjects(self) -> list[str]:
        return sorted({s for s, _ in self.streams})

    def samples(self) -> list[Sample]:
        return [s for key in sorted(self.streams) for s in self.streams[key]]

    def extent(self, subject: str) -> Interval | None:
        stamps = [ss[i].timestamp for (subj, _), ss in self.streams.items()
                  if subj == subject and ss for i in (0, -1)]
        if not stamps:
            return None
        return Interval(min(stamps), max(stamps))

    def filter(self, keep) -> "SampleSet":
        out = {}
        for key, ss in self.streams.items():
            kept = [s for s in ss if keep(s)]
            if kept:
                out[key] = kept
        return SampleSet(out, dict(self.unknown_concepts), self.duplicates, self.non_finite)

    @classmethod
    def from_samples(cls, samples: Iterable[Sample], concepts=None) -> "SampleSet":
        """Group, drop unknown/non-finite values and de-duplicate (last one wins)."""
        result = cls()
        latest: dict[tuple[str, str], dict[int, Sample]] = defaultdict(dict)
        unknown: dict[str, int] = defaultdict(int)
        for s in samples:
            if concepts is not None and s.concept_id not in concepts:
                unknown[s.concept_id] += 1
                continue
            if not math.isfinite(s.value):
                result.non_finite += 1
                continue
            stream = latest[(s.subject_id, s.concept_id)]
            if s.timestamp in stream:
                result.duplicates += 1
            stream[s.timestamp] = s
        result.streams = {
            key: [stream[t] for t in sorted(stream)] for key, stream in sorted(latest.items())
        }
        result.unknown_concepts = dict(sorted(unknown.items()))
        return result


def weekday_only(sample: Sample, day_offset: int = 0) -> bool:
    day = dt.datetime.fromtimestamp(sample.timestamp + day_offset, tz=dt.timezone.utc)
    return day.weekday() < 5


def read_samples(path) -> Iterable[Sample]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        if tuple(h.strip() for h in header) != HEADER:
            raise FormatError(f"expected header {','.join(HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise FormatError(f"expected 4 columns, got {len(row)}", line=lineno)
            try:
                yield Sample(row[0], row[1], parse_timestamp(row[2]), float(row[3]))
            except ValueError as exc:
                raise FormatError(str(exc), line=lineno) from None


def ingest(csv_path, kb=None) -> SampleSet:
    concepts = None if kb is None else kb.concepts
    result = SampleSet.from_samples(read_samples(csv_path), concepts)
    for concept, n in result.unknown_concepts.items():
        log.warning("skipped %d rows of unknown concept %r", n, concept)
    if result.duplicates:
        log.warning("%d duplicate timestamps (last value kept)", result.duplicates)
    if result.non_finite:
        log.warning("%d non-finite values rejected", result.non_finite)
    return result


def write_samples(path, samples: Iterable[Sample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for s in samples:
            w.writerow((s.subject_id, s.concept_id, s.timestamp, repr(float(s.value))))
