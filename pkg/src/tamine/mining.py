"""Level-wise mining of A1 temporal patterns over an item-list database.

A pattern of size k is the left-deep composite ``((A1 r1 A2) r2 A3) ... A_k``.
Each relation is evaluated between the *envelope* of the prefix instance
(the smallest interval spanning its bindings) and the interval of the next
atom.  Allen's relations are folded into three:

* ``BEFORE``   the atom starts at or after the envelope ends (meets included),
  at most ``before_max_gap`` seconds later;
* ``DURING``   one interval contains the other, endpoints inclusive
  (equal, starts and finishes included);
* ``OVERLAPS`` proper overlap with the envelope starting first.

``DURING`` wins over ``BEFORE`` when both hold, which only happens when
one side is a point sitting on the other's boundary.
"""
from __future__ import annotations

import bisect
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

from .abstraction import Interval
from .errors import ConfigError, ParseError
from .facts import Fact, ItemListDB

log = logging.getLogger(__name__)

DAY = 86400


class Relation(str, Enum):
    BEFORE = "before"
    OVERLAPS = "overlaps"
    DURING = "during"

    def __str__(self):
        return self.value


RELATIONS = tuple(Relation)
BEFORE, OVERLAPS, DURING = Relation.BEFORE, Relation.OVERLAPS, Relation.DURING


class Mode(str, Enum):
    ALL = "all"
    MOST_RECENT = "most-recent"
    LATEST = "latest"


class Coverage(str, Enum):
    SUM_DURATION = "sum-duration"
    DISTINCT_DAYS = "distinct-days"


class Pattern:
    """Facts ``A1..Ak`` joined left-deep by ``k-1`` relations.

    Ordering is lexicographic on the facts, then on the relations.
    """

    __slots__ = ("facts", "relations", "_key", "_hash")

    def __init__(self, facts: Sequence[Fact], relations: Sequence[Relation] = ()):
        facts = tuple(facts)
        relations = tuple(Relation(r) for r in relations)
        if not facts:
            raise ValueError("a pattern needs at least one fact")
        if len(relations) != len(facts) - 1:
            raise ValueError("a pattern of k facts needs k-1 relations")
        self._set(facts, relations,
                  (tuple((f.concept_name, f.value, f.duration_class) for f in facts),
                   tuple(r.value for r in relations)))

    def _set(self, facts, relations, key):
        object.__setattr__(self, "facts", facts)
        object.__setattr__(self, "relations", relations)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError("Pattern is immutable")

    def __eq__(self, other):
        return isinstance(other, Pattern) and self._key == other._key

    def __lt__(self, other):
        return self._key < other._key

    def __le__(self, other):
        return self._key <= other._key

    def __gt__(self, other):
        return self._key > other._key

    def __ge__(self, other):
        return self._key >= other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Pattern({str(self)!r})"

    def __reduce__(self):
        return (Pattern, (self.facts, self.relations))

    @property
    def size(self) -> int:
        return len(self.facts)

    @property
    def prefix(self) -> "Pattern":
        return Pattern(self.facts[:-1], self.relations[:-1])

    def extend(self, relation: Relation, fact: Fact) -> "Pattern":
        if type(relation) is not Relation:
            relation = Relation(relation)
        p = object.__new__(Pattern)
        fk, rk = self._key
        p._set(self.facts + (fact,), self.relations + (relation,),
               (fk + ((fact.concept_name, fact.value, fact.duration_class),),
                rk + (relation.value,)))
        return p

    def __str__(self):
        text = str(self.facts[0])
        for rel, fact in zip(self.relations, self.facts[1:]):
            text = f"({text} {rel.value} {fact})"
        return text

    def to_dict(self) -> dict:
        return {
            "facts": [[f.concept_name, f.value, f.duration_class] for f in self.facts],
            "relations": [r.value for r in self.relations],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Pattern":
        try:
            facts = tuple(Fact(*f) for f in data["facts"])
            return cls(facts, tuple(Relation(r) for r in data.get("relations", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad pattern entry {data!r}: {exc}") from None


class PatternInstance(NamedTuple):
    """A binding of one interval per fact; ``envelope`` spans all of them."""

    pattern: Pattern
    subject_id: str
    bindings: tuple[Interval, ...]
    envelope: Interval

    @classmethod
    def of(cls, pattern: Pattern, subject_id: str, bindings) -> "PatternInstance":
        bindings = tuple(bindings)
        env = Interval(min(b.start for b in bindings), max(b.end for b in bindings))
        return cls(pattern, subject_id, bindings, env)


@dataclass(frozen=True)
class MiningConfig:
    max_window: int = 10 * 3600
    min_horizontal_support: int = 1
    min_vertical_support: float = 0.0
    min_temporal_coverage: float = 3
    coverage_semantics: Coverage = Coverage.DISTINCT_DAYS
    mode: Mode = Mode.MOST_RECENT
    before_max_gap: int | None = None
    max_size: int | None = None
    day_offset: int = 0  # seconds added before bucketing timestamps into calendar days

    def __post_init__(self):
        object.__setattr__(self, "coverage_semantics", Coverage(self.coverage_semantics))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.before_max_gap is None:
            object.__setattr__(self, "before_max_gap", self.max_window)
        if self.max_window <= 0:
            raise ConfigError("max_window must be positive")
        if self.before_max_gap < 0 or self.before_max_gap > self.max_window:
            raise ConfigError("before_max_gap must lie in [0, max_window]")
        if self.min_horizontal_support < 1:
            raise ConfigError("min_horizontal_support must be >= 1")
        if not 0.0 <= self.min_vertical_support <= 1.0:
            raise ConfigError("min_vertical_support must be a fraction in [0, 1]")
        if self.min_temporal_coverage < 0:
            raise ConfigError("min_temporal_coverage must be >= 0")
        if self.max_size is not None and self.max_size < 1:
            raise ConfigError("max_size must be >= 1")

    def replace(self, **changes) -> "MiningConfig":
        data = asdict(self)
        if "max_window" in changes and "before_max_gap" not in changes \
                and self.before_max_gap == self.max_window:
            data["before_max_gap"] = None
        data.update(changes)
        return MiningConfig(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["coverage_semantics"] = self.coverage_semantics.value
        data["mode"] = self.mode.value
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "MiningConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown mining keys: {sorted(unknown)}")
        try:
            return cls(**dict(data))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def relation_between(prefix: Interval, atom: Interval, cfg: MiningConfig) -> Relation | None:
    if prefix.contains(atom) or atom.contains(prefix):
        return Relation.DURING
    gap = atom.start - prefix.end
    if gap >= 0:
        return Relation.BEFORE if gap <= cfg.before_max_gap else None
    if prefix.start < atom.start and atom.end > prefix.end:
        return Relation.OVERLAPS
    return None


def generate_candidates(large_prev: Iterable[Pattern], atoms: Iterable[Fact]) -> list[Pattern]:
    atoms = sorted(set(atoms))
    out = {p.extend(rel, a) for p in large_prev for a in atoms for rel in RELATIONS}
    return sorted(out)


def _atom_instances(pattern: Pattern, db: ItemListDB, cfg: MiningConfig) -> list[PatternInstance]:
    return [
        PatternInstance(pattern, inst.subject_id, (inst.interval,), inst.interval)
        for inst in db.lists.get(pattern.facts[0], ())
        if inst.interval.duration <= cfg.max_window
    ]


def extend_instances(prefix_instances: Sequence[PatternInstance], fact: Fact, db: ItemListDB,
                     cfg: MiningConfig) -> dict[Relation, list[PatternInstance]]:
    """Extend every prefix instance by one atom of ``fact``, for all relations at once."""
    out: dict[Relation, list[PatternInstance]] = {r: [] for r in RELATIONS}
    if not prefix_instances:
        return out
    pattern = prefix_instances[0].pattern
    extended = {r: pattern.extend(r, fact) for r in RELATIONS}
    reuse_slots = [i for i, f in enumerate(pattern.facts) if f == fact]
    window = cfg.max_window
    gap_limit = cfg.before_max_gap
    mode = cfg.mode
    select_one = mode is not Mode.ALL
    latest = mode is Mode.LATEST
    for pi in prefix_instances:
        ps, pe = pi.envelope
        starts, atoms = db.subject_index(fact, pi.subject_id)
        if not atoms:
            continue
        lo = bisect.bisect_left(starts, pe - window)
        hi = bisect.bisect_right(starts, ps + window)
        chosen: dict[Relation, list[Interval]] = {}
        for iv in atoms[lo:hi]:
            s_, e_ = iv
            ns = ps if ps < s_ else s_
            ne = pe if pe > e_ else e_
            if ne - ns > window:
                continue
            if reuse_slots and any(pi.bindings[i] == iv for i in reuse_slots):
                continue
            # inlined relation_between
            if (ps <= s_ and e_ <= pe) or (s_ <= ps and pe <= e_):
                rel = DURING
            elif s_ >= pe:
                if s_ - pe > gap_limit:
                    continue
                rel = BEFORE
            elif ps < s_ and e_ > pe:
                rel = OVERLAPS
            else:
                continue
            if not select_one or rel not in chosen:
                chosen.setdefault(rel, []).append(iv)
            elif latest:
                # atoms are scanned by ascending (start, end): the last one wins
                chosen[rel][0] = iv
            elif rel is BEFORE and s_ < chosen[rel][0].start:
                # most recent: smallest gap after the envelope; ties keep the earliest start
                chosen[rel][0] = iv
        for rel, ivs in chosen.items():
            target = out[rel]
            pattern_k = extended[rel]
            for iv in ivs:
                target.append(PatternInstance(
                    pattern_k, pi.subject_id, pi.bindings + (iv,),
                    Interval(ps if ps < iv.start else iv.start, pe if pe > iv.end else iv.end)))
    # prefix instances arrive sorted and atoms are scanned by start, so each list is sorted
    return out


def find_instances(candidate: Pattern, db: ItemListDB, cfg: MiningConfig,
                   prefix_instances: Sequence[PatternInstance] | None = None) -> list[PatternInstance]:
    """All instances of ``candidate`` under ``cfg.mode`` and ``cfg.max_window``."""
    if candidate.size == 1:
        return _atom_instances(candidate, db, cfg)
    if prefix_instances is None:
        prefix_instances = find_instances(candidate.prefix, db, cfg)
    return extend_instances(prefix_instances, candidate.facts[-1], db, cfg)[candidate.relations[-1]]


def horizontal_support(instances: Iterable[PatternInstance], subject: str) -> int:
    return sum(1 for i in instances if i.subject_id == subject)


def temporal_coverage(instances: Iterable[PatternInstance], subject: str,
                      semantics: Coverage = Coverage.SUM_DURATION, day_offset: int = 0) -> int:
    mine = [i for i in instances if i.subject_id == subject]
    if Coverage(semantics) is Coverage.SUM_DURATION:
        return sum(i.envelope.duration for i in mine)
    return len({(i.envelope.start + day_offset) // DAY for i in mine})


def qualifying_subjects(instances: Sequence[PatternInstance], cfg: MiningConfig,
                        eligible: Iterable[str]) -> frozenset[str]:
    """Subjects meeting the horizontal and coverage thresholds.

    Only subjects in ``eligible`` are considered; the miner passes the
    subjects that supported the prefix, keeping subject support downward
    closed along the A1 chain.
    """
    by_subject: dict[str, list[PatternInstance]] = defaultdict(list)
    for i in instances:
        by_subject[i.subject_id].append(i)
    out = set()
    for subject in eligible:
        insts = by_subject.get(subject, [])
        if not insts or len(insts) < cfg.min_horizontal_support:
            continue
        cov = temporal_coverage(insts, subject, cfg.coverage_semantics, cfg.day_offset)
        if cov >= cfg.min_temporal_coverage:
            out.add(subject)
    return frozenset(out)


def vertical_support(instances: Sequence[PatternInstance], db: ItemListDB, cfg: MiningConfig,
                     eligible: Iterable[str] | None = None) -> float:
    if not db.subjects:
        return 0.0
    eligible = db.subjects if eligible is None else eligible
    return len(qualifying_subjects(instances, cfg, eligible)) / len(db.subjects)


@dataclass(frozen=True)
class PatternStats:
    pattern: Pattern
    horizontal_support: Mapping[str, int]
    vertical_support: float
    temporal_coverage: Mapping[str, int]
    subjects: frozenset[str] = field(default_factory=frozenset)
    instances: tuple[PatternInstance, ...] = field(default=(), compare=False, repr=False)

    @property
    def total_support(self) -> int:
        return sum(self.horizontal_support.values())

    def to_dict(self) -> dict:
        data = self.pattern.to_dict()
        data.update(
            size=self.pattern.size,
            horizontal_support=dict(sorted(self.horizontal_support.items())),
            vertical_support=self.vertical_support,
            temporal_coverage=dict(sorted(self.temporal_coverage.items())),
            subjects=sorted(self.subjects),
        )
        return data


@dataclass
class MiningResult:
    levels: dict[int, list[PatternStats]]
    config: MiningConfig
    subjects: tuple[str, ...] = ()

    def stats(self, sizes: Iterable[int] | None = None) -> list[PatternStats]:
        keep = None if sizes is None else set(sizes)
        return [s for k in sorted(self.levels) if keep is None or k in keep for s in self.levels[k]]

    def patterns(self, sizes: Iterable[int] | None = None) -> list[Pattern]:
        return [s.pattern for s in self.stats(sizes)]

    def get(self, pattern: Pattern) -> PatternStats | None:
        for s in self.levels.get(pattern.size, ()):
            if s.pattern == pattern:
                return s
        return None

    def __len__(self):
        return sum(len(v) for v in self.levels.values())


def _evaluate(pattern, instances, db, cfg, eligible, min_vertical) -> PatternStats | None:
    subjects = qualifying_subjects(instances, cfg, eligible)
    if not subjects:
        return None
    vertical = len(subjects) / len(db.subjects)
    if vertical < min_vertical:
        return None
    hs: dict[str, int] = defaultdict(int)
    for i in instances:
        hs[i.subject_id] += 1
    cov = {s: temporal_coverage(instances, s, cfg.coverage_semantics, cfg.day_offset) for s in hs}
    return PatternStats(pattern, dict(sorted(hs.items())), vertical, dict(sorted(cov.items())),
                        subjects, tuple(instances))


def mine(db: ItemListDB, cfg: MiningConfig) -> MiningResult:
    """Apriori-style passes until no large k-items remain (or ``cfg.max_size``)."""
    subjects = tuple(sorted(db.subjects))
    if not subjects or not db.lists:
        return MiningResult({}, cfg, subjects)
    # vertical support is meaningless with a single subject
    min_vertical = 0.0 if len(subjects) == 1 else cfg.min_vertical_support

    level = []
    for fact in db.facts:
        pattern = Pattern((fact,))
        stats = _evaluate(pattern, find_instances(pattern, db, cfg), db, cfg,
                          db.subjects, min_vertical)
        if stats is not None:
            level.append(stats)
    levels = {1: level} if level else {}
    atoms = [s.pattern.facts[0] for s in level]
    log.info("size 1: %d large items", len(level))

    k = 2
    while level and (cfg.max_size is None or k <= cfg.max_size):
        # same candidate set as generate_candidates(level, atoms), grouped by (prefix, atom)
        # so that each group's instances are searched once
        current = []
        for prefix in level:
            for atom in atoms:
                extensions = extend_instances(prefix.instances, atom, db, cfg)
                for rel in RELATIONS:
                    cand = prefix.pattern.extend(rel, atom)
                    stats = _evaluate(cand, extensions[rel], db, cfg, prefix.subjects,
                                      min_vertical)
                    if stats is not None:
                        current.append(stats)
        current.sort(key=lambda st: st.pattern)
        log.info("size %d: %d large items", k, len(current))
        if not current:
            break
        levels[k] = current
        level = current
        k += 1
    return MiningResult(levels, cfg, subjects)


LIBRARY_FORMAT = "tamine-library/1"


def pattern_ids(stats: Sequence[PatternStats]) -> list[str]:
    width = max(4, len(str(len(stats))))
    return [f"P{n:0{width}d}" for n in range(1, len(stats) + 1)]


def write_library(path, stats: Sequence[PatternStats], cfg: MiningConfig,
                  subjects: Sequence[str] = ()) -> None:
    """Write patterns with their supports as deterministic, sorted JSON."""
    entries = []
    for pid, s in zip(pattern_ids(stats), stats):
        entry = {"id": pid}
        entry.update(s.to_dict())
        entries.append(entry)
    doc = {
        "format": LIBRARY_FORMAT,
        "mining": cfg.to_dict(),
        "subjects": sorted(subjects),
        "patterns": entries,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class Library:
    """A pattern library as read back from disk."""

    patterns: list[Pattern]
    ids: list[str]
    config: MiningConfig
    subjects: list[str]
    entries: list[dict] = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.patterns)

    @property
    def id_map(self) -> dict[Pattern, str]:
        return dict(zip(self.patterns, self.ids))


def read_library(path) -> Library:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != LIBRARY_FORMAT:
        raise ParseError(f"{path}: not a {LIBRARY_FORMAT} file")
    entries = doc.get("patterns", [])
    patterns = [Pattern.from_dict(e) for e in entries]
    ids = [e.get("id", f"P{n:04d}") for n, e in enumerate(entries, start=1)]
    return Library(patterns, ids, MiningConfig.from_dict(doc.get("mining", {})),
                   list(doc.get("subjects", [])), entries)
