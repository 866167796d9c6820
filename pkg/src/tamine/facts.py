"""Duration discretisation and the item-list database consumed by the miner."""
from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping

from .abstraction import AbstractInterval, Interval
from .errors import FormatError

if TYPE_CHECKING:
    from .knowledge import DurationClassification


@dataclass(frozen=True, order=True)
class Fact:
    concept_name: str
    value: str
    duration_class: str

    def __post_init__(self):
        if not (self.concept_name and self.value and self.duration_class):
            raise ValueError(f"fact fields must be non-empty: {self!r}")

    def __str__(self):
        return f"{self.concept_name}={self.value}/{self.duration_class}"


@dataclass(frozen=True, order=True)
class FactInstance:
    fact: Fact
    subject_id: str
    interval: Interval


def classify_duration(seconds: float, classes: "DurationClassification") -> str:
    """First class whose (inclusive) upper bound is >= ``seconds``."""
    if seconds < 0:
        raise ValueError(f"negative duration {seconds}")
    uppers = [upper for upper, _ in classes.boundaries]
    return classes.boundaries[bisect.bisect_left(uppers, seconds)][1]


def fact_name(concept_id: str, kind) -> str:
    return f"{concept_id}_{kind.suffix}"


@dataclass(frozen=True)
class ItemListDB:
    """Fact -> instances sorted by ``(subject, start, end)``."""

    lists: Mapping[Fact, tuple[FactInstance, ...]]
    subjects: frozenset[str]
    time_extent: Mapping[str, Interval]
    _index: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def facts(self) -> list[Fact]:
        return sorted(self.lists)

    def __len__(self):
        return sum(len(v) for v in self.lists.values())

    def instances(self) -> list[FactInstance]:
        return [inst for fact in self.facts for inst in self.lists[fact]]

    def subject_index(self, fact: Fact, subject: str):
        """``(starts, intervals)`` of one fact for one subject, cached."""
        key = (fact, subject)
        hit = self._index.get(key)
        if hit is None:
            ivs = [i.interval for i in self.lists.get(fact, ()) if i.subject_id == subject]
            hit = ([iv.start for iv in ivs], ivs)
            self._index[key] = hit
        return hit

    @classmethod
    def from_instances(cls, instances: Iterable[FactInstance],
                       subjects: Iterable[str] = (),
                       time_extent: Mapping[str, Interval] | None = None) -> "ItemListDB":
        grouped: dict[Fact, set[FactInstance]] = {}
        for inst in instances:
            grouped.setdefault(inst.fact, set()).add(inst)
        lists = {
            fact: tuple(sorted(insts, key=lambda i: (i.subject_id, i.interval)))
            for fact, insts in sorted(grouped.items())
        }
        subj = set(subjects)
        extent: dict[str, Interval] = dict(time_extent or {})
        for insts in lists.values():
            for i in insts:
                subj.add(i.subject_id)
                if time_extent is None:
                    cur = extent.get(i.subject_id)
                    if cur is None:
                        extent[i.subject_id] = i.interval
                    else:
                        extent[i.subject_id] = Interval(min(cur.start, i.interval.start),
                                                        max(cur.end, i.interval.end))
        return cls(lists, frozenset(subj), dict(sorted(extent.items())))


def build_item_lists(abstractions: Iterable[AbstractInterval],
                     classes: "DurationClassification",
                     subjects: Iterable[str] = (),
                     time_extent: Mapping[str, Interval] | None = None) -> ItemListDB:
    instances = []
    for a in abstractions:
        fact = Fact(fact_name(a.concept_id, a.kind), a.symbol,
                    classify_duration(a.interval.duration, classes))
        instances.append(FactInstance(fact, a.subject_id, a.interval))
    return ItemListDB.from_instances(instances, subjects, time_extent)


ITEM_COLUMNS = ("concept_name", "value", "duration_class", "subject_id", "start", "end")


def write_item_lists(db: ItemListDB, path) -> None:
    """Tab-separated, one instance per line, header row, sorted by fact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(ITEM_COLUMNS)
        for inst in db.instances():
            f = inst.fact
            w.writerow((f.concept_name, f.value, f.duration_class, inst.subject_id,
                        inst.interval.start, inst.interval.end))


def read_item_lists(path) -> ItemListDB:
    instances = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None:
            return ItemListDB.from_instances(())
        if tuple(header) != ITEM_COLUMNS:
            raise FormatError(f"expected header {ITEM_COLUMNS}, got {header}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(ITEM_COLUMNS):
                raise FormatError(f"expected {len(ITEM_COLUMNS)} columns", line=lineno)
            try:
                start, end = int(row[4]), int(row[5])
                fact = Fact(row[0], row[1], row[2])
            except ValueError as exc:
                raise FormatError(str(exc), line=lineno) from None
            if end < start:
                raise FormatError("end before start", line=lineno)
            instances.append(FactInstance(fact, row[3], Interval(start, end)))
    return ItemListDB.from_instances(instances)
