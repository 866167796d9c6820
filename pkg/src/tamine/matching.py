"""Locate instances of library patterns in an item-list database."""
from __future__ import annotations

import csv
import warnings
from typing import Mapping, Sequence

from .errors import UnknownFactWarning
from .facts import ItemListDB
from .mining import MiningConfig, Pattern, PatternInstance, extend_instances, find_instances


def match_patterns(library: Sequence[Pattern], db: ItemListDB,
                   cfg: MiningConfig) -> list[PatternInstance]:
    """Every instance of every library pattern, using the miner's instance semantics.

    Prefix instance sets are shared between library patterns with a common
    A1 prefix.  Patterns mentioning a fact absent from ``db`` contribute
    nothing; one :class:`UnknownFactWarning` summarises them.
    """
    known = set(db.lists)
    memo: dict[Pattern, list[PatternInstance]] = {}

    def instances(p: Pattern) -> list[PatternInstance]:
        hit = memo.get(p)
        if hit is None:
            if p.size == 1:
                hit = find_instances(p, db, cfg)
            else:
                hit = extend_instances(instances(p.prefix), p.facts[-1], db, cfg)[p.relations[-1]]
            memo[p] = hit
        return hit

    out: list[PatternInstance] = []
    skipped = 0
    missing: set = set()
    for pattern in dict.fromkeys(library):
        absent = [f for f in pattern.facts if f not in known]
        if absent:
            skipped += 1
            missing.update(absent)
            continue
        out.extend(instances(pattern))
    if skipped:
        shown = [str(f) for f in sorted(missing)]
        names = ", ".join(shown[:5])
        if len(shown) > 5:
            names += f" and {len(shown) - 5} more"
        warnings.warn(f"{skipped} library patterns skipped, facts never observed: {names}",
                      UnknownFactWarning, stacklevel=2)
    return out


INSTANCE_COLUMNS = ("pattern_id", "subject_id", "envelope_start", "envelope_end", "bindings")


def write_instances(path, instances: Sequence[PatternInstance],
                    pattern_ids: Mapping[Pattern, str]) -> None:
    """Tab-separated; bindings are ``start-end`` pairs joined by ``;`` in fact order."""
    rows = sorted(instances, key=lambda i: (pattern_ids[i.pattern], i.subject_id, i.bindings))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(INSTANCE_COLUMNS)
        for inst in rows:
            env = inst.envelope
            w.writerow((pattern_ids[inst.pattern], inst.subject_id, env.start, env.end,
                        ";".join(f"{b.start}-{b.end}" for b in inst.bindings)))
