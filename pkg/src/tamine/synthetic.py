"""Synthetic server telemetry with planted daily patterns.

Five metrics sampled once a minute follow a fixed weekday profile: office
hours load, log rotation and shipping just after midnight, a nightly backup
and a late evening batch job.  Two patterns are planted on every weekday
with a small daily drift in their start time:

* size 2: a 5 minute system CPU spike, then 8 minutes later a 5 minute burst
  of outgoing traffic;
* size 3: a 10 minute burst of incoming traffic overlapped by a system CPU
  spike, both inside a 40 minute dip of free memory.

Weekend days, and any day listed in ``corrupt_days``, get a flat profile
with none of the above.
"""
from __future__ import annotations

import datetime as dt
from typing import Iterable

from .abstraction import Interval, Sample
from .facts import Fact
from .knowledge import ConceptDefinition, KnowledgeBase
from .mining import Pattern, Relation

DAY = 86400
SUBJECT = "server-206"
TRAIN_START = dt.date(2011, 3, 21)  # a Monday
TEST_START = dt.date(2011, 3, 28)

# piecewise-linear weekday profiles: (minute of day, value)
PROFILES = {
    "CPUUser": [(0, 5), (360, 5), (600, 70), (720, 90), (780, 90), (1020, 40), (1140, 5),
                (1440, 5)],
    "CPUSys": [(0, 8), (5, 8), (6, 30), (20, 30), (21, 8), (120, 8), (121, 30), (165, 30), (166, 8), (720, 8), (721, 25), (840, 25),
               (841, 8), (1320, 8), (1321, 30), (1380, 30), (1381, 8), (1440, 8)],
    "MemFree": [(0, 70), (420, 70), (600, 45), (1020, 40), (1200, 65), (1440, 70)],
    "BytesReceivedSec": [(0, 100), (35, 100), (36, 400), (50, 400), (51, 100), (480, 100), (540, 600), (1080, 600), (1140, 100), (1320, 100),
                         (1321, 400), (1380, 400), (1381, 100), (1440, 100)],
    "BytesSentSec": [(0, 50), (90, 50), (91, 800), (210, 800), (211, 50), (480, 50), (540, 300),
                     (1080, 300), (1140, 50), (1440, 50)],
}

FLAT = {"CPUUser": 25, "CPUSys": 8, "MemFree": 60, "BytesReceivedSec": 100, "BytesSentSec": 50}

THRESHOLDS = {
    "CPUUser": ([15, 35, 55, 75], ["VERY_LOW", "LOW", "MEDIUM", "HIGH", "VERY_HIGH"]),
    "CPUSys": ([20, 40], ["LOW", "MEDIUM", "HIGH"]),
    "MemFree": ([25, 50], ["LOW", "MEDIUM", "HIGH"]),
    "BytesReceivedSec": ([300, 1000], ["LOW", "MEDIUM", "HIGH"]),
    "BytesSentSec": ([100, 500, 1500], ["LOW", "MEDIUM", "HIGH", "VERY_HIGH"]),
}

PLANTED_SIZE2 = Pattern(
    (Fact("CPUSys_STATE", "HIGH", "MEDIUM"), Fact("BytesSentSec_STATE", "VERY_HIGH", "MEDIUM")),
    (Relation.BEFORE,),
)
PLANTED_SIZE3 = Pattern(
    (Fact("BytesReceivedSec_STATE", "HIGH", "MEDIUM"), Fact("CPUSys_STATE", "HIGH", "MEDIUM"),
     Fact("MemFree_STATE", "LOW", "LONG")),
    (Relation.OVERLAPS, Relation.DURING),
)


def _profile_value(knots, minute: int) -> float:
    for (m0, v0), (m1, v1) in zip(knots, knots[1:]):
        if m0 <= minute <= m1:
            if m1 == m0:
                return v0
            return v0 + (v1 - v0) * (minute - m0) / (m1 - m0)
    return knots[-1][1]


def _day_values(concept: str, day_index: int, normal: bool) -> list[float]:
    if not normal:
        return [float(FLAT[concept])] * 1440
    values = [float(_profile_value(PROFILES[concept], m)) for m in range(1440)]
    drift = 3 * (day_index % 5)
    spike2 = 540 + drift
    burst3 = 900 + 2 * (day_index % 5)

    def put(lo, hi, v):
        for m in range(lo, hi + 1):
            values[m] = v

    if concept == "CPUSys":
        put(spike2, spike2 + 4, 50.0)
        put(burst3 + 5, burst3 + 11, 50.0)
    elif concept == "BytesSentSec":
        put(spike2 + 12, spike2 + 16, 2000.0)
    elif concept == "BytesReceivedSec":
        put(burst3, burst3 + 9, 1500.0)
    elif concept == "MemFree":
        put(burst3 - 10, burst3 + 29, 15.0)
    return values


def is_weekday(day: dt.date) -> bool:
    return day.weekday() < 5


def planted_samples(start: dt.date = TRAIN_START, days: int = 14,
                    corrupt_days: Iterable[dt.date] = (), subject: str = SUBJECT,
                    concepts: Iterable[str] | None = None,
                    extra_concepts: int = 0) -> list[Sample]:
    """One sample per minute per concept for ``days`` consecutive days.

    ``extra_concepts`` adds copies of the CPUUser profile named ``Extra<n>``,
    shifted by n hours, for load testing.
    """
    corrupt = set(corrupt_days)
    names = list(PROFILES if concepts is None else concepts)
    out = []
    for d in range(days):
        day = start + dt.timedelta(days=d)
        base = int(dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc).timestamp())
        normal = is_weekday(day) and day not in corrupt
        for concept in names:
            for m, v in enumerate(_day_values(concept, d, normal)):
                out.append(Sample(subject, concept, base + 60 * m, v))
        for n in range(1, extra_concepts + 1):
            values = _day_values("CPUUser", d, normal)
            shift = 60 * n
            for m in range(1440):
                out.append(Sample(subject, f"Extra{n}", base + 60 * m, values[(m - shift) % 1440]))
    out.sort(key=lambda s: (s.subject_id, s.concept_id, s.timestamp))
    return out


def planted_knowledge_base(extra_concepts: int = 0) -> KnowledgeBase:
    concepts = {
        cid: ConceptDefinition.from_thresholds(cid, th, sym)
        for cid, (th, sym) in THRESHOLDS.items()
    }
    th, sym = THRESHOLDS["CPUUser"]
    for n in range(1, extra_concepts + 1):
        concepts[f"Extra{n}"] = ConceptDefinition.from_thresholds(f"Extra{n}", th, sym)
    return KnowledgeBase(concepts)


def day_interval(day: dt.date):
    base = int(dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc).timestamp())
    return Interval(base, base + DAY - 60)
