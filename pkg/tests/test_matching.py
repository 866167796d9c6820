import warnings

import pytest

from tamine.errors import UnknownFactWarning
from tamine.matching import match_patterns, write_instances
from tamine.mining import Coverage, MiningConfig, Mode, Pattern, mine

from helpers import db_of, fact

A, B = fact("A"), fact("B")
CFG = MiningConfig(mode=Mode.ALL, min_temporal_coverage=0, coverage_semantics=Coverage.SUM_DURATION,
                   max_window=100)


def test_empty_library():
    assert match_patterns([], db_of(("A", 0, 1)), CFG) == []


def test_absent_fact_gives_no_instances_that_day():
    # B is missing on the second "day"
    db = db_of(("A", 0, 1), ("B", 3, 4), ("A", 1000, 1001))
    inst = match_patterns([Pattern([A, B], ["before"])], db, CFG)
    assert [i.envelope for i in inst] == [(0, 4)]


def test_unknown_fact_warns():
    with pytest.warns(UnknownFactWarning):
        assert match_patterns([Pattern([fact("Z")])], db_of(("A", 0, 1)), CFG) == []


def test_shared_prefixes_give_the_same_instances():
    db = db_of(("A", 0, 5), ("B", 6, 9), ("A", 10, 12), ("B", 11, 30))
    result = mine(db, CFG)
    together = match_patterns(result.patterns(), db, CFG)
    one_by_one = [i for p in result.patterns() for i in match_patterns([p], db, CFG)]
    assert together == one_by_one


def test_matches_same_counts_on_identical_week(planted_train):
    kb, db = planted_train
    cfg = MiningConfig(max_size=2)
    result = mine(db, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        found = match_patterns(result.patterns(), db, cfg)
    counts = {}
    for i in found:
        counts[i.pattern] = counts.get(i.pattern, 0) + 1
    assert counts == {s.pattern: s.total_support for s in result.stats()}


def test_write_instances(tmp_path):
    p = Pattern([A, B], ["before"])
    db = db_of(("A", 0, 1), ("B", 3, 4))
    inst = match_patterns([p], db, CFG)
    path = tmp_path / "instances.tsv"
    write_instances(path, inst, {p: "P0001"})
    lines = path.read_text().splitlines()
    assert lines[0].split("\t") == ["pattern_id", "subject_id", "envelope_start", "envelope_end",
                                    "bindings"]
    assert lines[1] == "P0001\ts\t0\t4\t0-1;3-4"


def test_unknown_facts_warn_once():
    library = [Pattern([fact("Z")]), Pattern([fact("Y"), A], ["before"]), Pattern([A])]
    with pytest.warns(UnknownFactWarning, match="2 library patterns") as record:
        found = match_patterns(library, db_of(("A", 0, 1)), CFG)
    assert len(record) == 1
    assert len(found) == 1
