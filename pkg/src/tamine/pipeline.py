"""End-to-end train/detect orchestration, independent of the command line."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .abstraction import AbstractInterval, Interval, abstract_gradient, abstract_state
from .errors import EmptyLibraryError
from .facts import ItemListDB, build_item_lists
from .ingest import SampleSet
from .knowledge import KnowledgeBase
from .matching import match_patterns
from .mining import Library, MiningConfig, MiningResult, Mode, PatternInstance, PatternStats, mine
from .skyline import (Label, SkylineBin, SkylineConfig, SkylineInterval, detect_anomalies,
                      merge_bins, skyline_bins)

log = logging.getLogger(__name__)

DEFAULT_SIZES = (2, 3)


def abstract_samples(samples: SampleSet, kb: KnowledgeBase) -> list[AbstractInterval]:
    out: list[AbstractInterval] = []
    for (subject, concept), stream in samples.streams.items():
        definition = kb.concepts[concept]
        out.extend(abstract_state(stream, definition))
        out.extend(abstract_gradient(stream, definition))
    return out


def build_db(samples: SampleSet, kb: KnowledgeBase) -> ItemListDB:
    subjects = samples.subjects
    extents = {s: samples.extent(s) for s in subjects}
    return build_item_lists(abstract_samples(samples, kb), kb.duration_classes, subjects,
                            {s: e for s, e in extents.items() if e is not None})


def _rank_key(s: PatternStats):
    return (-s.vertical_support, -sum(s.temporal_coverage.values()), -s.total_support,
            s.pattern)


def select_patterns(result: MiningResult, sizes: Iterable[int] | None = DEFAULT_SIZES,
                    top_k: int | None = None,
                    chooser: Callable[[PatternStats], bool] | None = None) -> list[PatternStats]:
    """Restrict to ``sizes``, optionally keep the ``top_k`` best supported, then ask ``chooser``."""
    chosen = result.stats(sizes)
    if top_k is not None:
        chosen = sorted(sorted(chosen, key=_rank_key)[:top_k],
                        key=lambda s: (s.pattern.size, s.pattern))
    if chooser is not None:
        chosen = [s for s in chosen if chooser(s)]
    return chosen


@dataclass
class TrainResult:
    db: ItemListDB
    mining: MiningResult
    selected: list[PatternStats]


def train(samples: SampleSet, kb: KnowledgeBase, cfg: MiningConfig | None = None,
          sizes: Sequence[int] | None = DEFAULT_SIZES, top_k: int | None = None,
          chooser=None) -> TrainResult:
    cfg = cfg or kb.mining_config
    if sizes and cfg.max_size is None:
        # no point mining deeper than the largest size that will be kept
        cfg = cfg.replace(max_size=max(sizes))
    db = build_db(samples, kb)
    log.info("item-list database: %d facts, %d instances", len(db.lists), len(db))
    result = mine(db, cfg)
    selected = select_patterns(result, sizes, top_k, chooser)
    if not selected:
        log.warning("no patterns selected for the library")
    return TrainResult(db, result, selected)


@dataclass
class SubjectDetection:
    subject_id: str
    timeline: Interval
    bins: list[SkylineBin]
    intervals: list[SkylineInterval]
    anomalies: list[Interval]


@dataclass
class DetectResult:
    instances: list[PatternInstance]
    subjects: list[SubjectDetection] = field(default_factory=list)

    @property
    def anomalies(self) -> list[tuple[str, Interval]]:
        return [(d.subject_id, a) for d in self.subjects for a in d.anomalies]

    def longest_anomaly(self) -> int:
        return max((a.duration for _, a in self.anomalies), default=0)


def detect(db: ItemListDB, library: Library, skyline_cfg: SkylineConfig,
           timelines: dict[str, Interval], mode: Mode = Mode.ALL) -> DetectResult:
    """Match the library on ``db`` and build one skyline per subject timeline."""
    if len(library) == 0:
        raise EmptyLibraryError("the pattern library is empty")
    cfg = library.config.replace(mode=mode)
    instances = match_patterns(library.patterns, db, cfg)
    ids = library.id_map
    result = DetectResult(instances)
    for subject, timeline in sorted(timelines.items()):
        if timeline.end <= timeline.start:
            log.warning("subject %s: degenerate timeline, skipped", subject)
            continue
        mine_ = [i for i in instances if i.subject_id == subject]
        bins = skyline_bins(mine_, len(library), timeline, skyline_cfg, ids)
        intervals = merge_bins(bins)
        result.subjects.append(SubjectDetection(subject, timeline, bins, intervals,
                                                detect_anomalies(intervals, skyline_cfg)))
    return result


def few_intervals(result: DetectResult) -> list[tuple[str, SkylineInterval]]:
    return [(d.subject_id, s) for d in result.subjects for s in d.intervals if s.label is Label.FEW]
