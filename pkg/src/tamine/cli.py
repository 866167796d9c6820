"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or malformed
input, empty pattern library, no timeline), 3 configuration error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys
from pathlib import Path

from . import __version__
from .abstraction import Interval
from .errors import (ConfigError, EmptyLibraryError, FormatError, ParseError, TamineError,
                     ValidationError)
from .facts import read_item_lists, write_item_lists
from .ingest import SampleSet, ingest, parse_timestamp, weekday_only
from .knowledge import KnowledgeBase, dump_knowledge_base, load_knowledge_base, parse_duration
from .matching import match_patterns, write_instances
from .mining import (Coverage, Library, MiningConfig, Mode, PatternStats, mine, read_library,
                     write_library)
from .pipeline import DEFAULT_SIZES, build_db, detect, train
from .skyline import SkylineConfig, write_report, write_series

log = logging.getLogger("tamine")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONFIG = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(sorted({int(x) for x in text.split(",") if x.strip()}))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of sizes: {text!r}")
    if not sizes or sizes[0] < 1:
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return sizes


def _duration(text: str):
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _timestamp(text: str) -> int:
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# -- shared helpers -----------------------------------------------------------

def _load_kb(args) -> KnowledgeBase:
    if not args.config:
        raise UsageError("--config is required")
    return load_knowledge_base(args.config)


def _load_samples(path, kb: KnowledgeBase, weekdays_only: bool) -> SampleSet:
    samples = ingest(path, kb)
    if weekdays_only:
        offset = kb.mining_config.day_offset
        samples = samples.filter(lambda s: weekday_only(s, offset))
    log.info("%s: %d samples in %d streams", path, len(samples), len(samples.streams))
    return samples


def _mining_config(args, base: MiningConfig) -> MiningConfig:
    changes = {}
    if getattr(args, "mode", None):
        changes["mode"] = Mode(args.mode)
    if getattr(args, "max_window", None) is not None:
        changes["max_window"] = args.max_window
    if getattr(args, "before_gap", None) is not None:
        changes["before_max_gap"] = args.before_gap
    if getattr(args, "coverage_days", None) is not None:
        changes.update(coverage_semantics=Coverage.DISTINCT_DAYS,
                       min_temporal_coverage=args.coverage_days)
    if getattr(args, "coverage_seconds", None) is not None:
        changes.update(coverage_semantics=Coverage.SUM_DURATION,
                       min_temporal_coverage=args.coverage_seconds)
    if getattr(args, "min_support", None) is not None:
        changes["min_horizontal_support"] = args.min_support
    if getattr(args, "min_vertical", None) is not None:
        changes["min_vertical_support"] = args.min_vertical
    return base.replace(**changes) if changes else base


def _skyline_config(args, base: SkylineConfig) -> SkylineConfig:
    data = base.to_dict()
    if getattr(args, "bin", None) is not None:
        data["bin_seconds"] = args.bin
    if getattr(args, "min_anomaly", None) is not None:
        data["min_anomaly_duration"] = args.min_anomaly
    if getattr(args, "count", None):
        data["count"] = args.count
    return SkylineConfig(**data)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _interactive_chooser(stream_in=None, stream_out=None):
    stream_in = stream_in or sys.stdin
    stream_out = stream_out or sys.stdout
    state = {"all": False, "quit": False}

    def choose(stats: PatternStats) -> bool:
        if state["all"]:
            return True
        if state["quit"]:
            return False
        while True:
            stream_out.write(f"{stats.pattern}\n  support={stats.total_support} "
                             f"coverage={dict(stats.temporal_coverage)}  keep? [y/N/a/q] ")
            stream_out.flush()
            answer = stream_in.readline().strip().lower()
            if answer in ("y", "yes"):
                return True
            if answer in ("", "n", "no"):
                return False
            if answer == "a":
                state["all"] = True
                return True
            if answer == "q":
                state["quit"] = True
                return False

    return choose


def _fmt_duration(seconds: int) -> str:
    h, rem = divmod(int(seconds), 3600)
    return f"{h}h{rem // 60:02d}m"


# -- subcommands --------------------------------------------------------------

def cmd_abstract(args) -> int:
    kb = _load_kb(args)
    samples = _load_samples(args.input, kb, args.weekdays_only)
    db = build_db(samples, kb)
    out = _out_dir(args)
    write_item_lists(db, out / "items.tsv")
    print(f"{len(db)} fact instances of {len(db.lists)} facts -> {out / 'items.tsv'}")
    return EXIT_OK


def _db_from_args(args, kb: KnowledgeBase | None):
    if args.items:
        return read_item_lists(args.items), None
    if not args.input:
        raise UsageError("give --items or --input")
    if kb is None:
        raise UsageError("--input needs --config")
    samples = _load_samples(args.input, kb, args.weekdays_only)
    return build_db(samples, kb), samples


def cmd_mine(args) -> int:
    kb = load_knowledge_base(args.config) if args.config else None
    db, _ = _db_from_args(args, kb)
    cfg = _mining_config(args, kb.mining_config if kb else MiningConfig())
    if args.sizes and cfg.max_size is None:
        cfg = cfg.replace(max_size=max(args.sizes))
    result = mine(db, cfg)
    stats = result.stats(args.sizes)
    out = _out_dir(args)
    write_library(out / "patterns.json", stats, cfg, result.subjects)
    counts = ", ".join(f"size {k}: {len(v)}" for k, v in sorted(result.levels.items()))
    print(f"mined {len(result)} patterns ({counts or 'none'}); wrote {len(stats)} "
          f"-> {out / 'patterns.json'}")
    return EXIT_OK


def _train(args, kb, out: Path):
    samples = _load_samples(args.input if args.command == "train" else args.train, kb,
                            args.weekdays_only)
    cfg = _mining_config(args, kb.mining_config)
    chooser = _interactive_chooser() if args.interactive else None
    sizes = args.sizes or DEFAULT_SIZES
    result = train(samples, kb, cfg, sizes=sizes, top_k=args.top_k, chooser=chooser)
    write_item_lists(result.db, out / "train_items.tsv")
    write_library(out / "library.json", result.selected, result.mining.config,
                  result.mining.subjects or samples.subjects)
    counts = ", ".join(f"size {k}: {len(v)}" for k, v in sorted(result.mining.levels.items()))
    print(f"mined {len(result.mining)} patterns ({counts or 'none'}); "
          f"library of {len(result.selected)} -> {out / 'library.json'}")
    return result


def cmd_train(args) -> int:
    kb = _load_kb(args)
    _train(args, kb, _out_dir(args))
    return EXIT_OK


def cmd_match(args) -> int:
    kb = load_knowledge_base(args.config) if args.config else None
    library = read_library(args.library)
    db, _ = _db_from_args(args, kb)
    cfg = library.config.replace(mode=Mode(args.mode or "all"))
    instances = match_patterns(library.patterns, db, cfg)
    out = _out_dir(args)
    write_instances(out / "instances.tsv", instances, library.id_map)
    print(f"{len(instances)} instances of {len(library)} patterns -> {out / 'instances.tsv'}")
    return EXIT_OK


def _detect(args, kb: KnowledgeBase, library: Library, test_path, out: Path) -> int:
    samples = _load_samples(test_path, kb, args.weekdays_only)
    db = build_db(samples, kb)
    sky_cfg = _skyline_config(args, kb.skyline_config)
    if args.timeline:
        start, end = args.timeline
        subjects = samples.subjects or library.subjects
        if not subjects:
            raise FormatError("no subjects in the test data or the library")
        timelines = {s: Interval(start, end) for s in subjects}
    else:
        timelines = {s: samples.extent(s) for s in samples.subjects}
        if not timelines:
            raise FormatError("test data is empty; pass --timeline START END")
    match_mode = args.match_mode if args.command == "run" else args.mode
    result = detect(db, library, sky_cfg, timelines, Mode(match_mode or "all"))

    write_item_lists(db, out / "test_items.tsv")
    write_instances(out / "instances.tsv", result.instances, library.id_map)
    write_report(out / "report.csv", [(d.subject_id, s) for d in result.subjects
                                      for s in d.intervals])
    write_series(out / "skyline_series.csv", [(d.subject_id, b) for d in result.subjects
                                              for b in d.bins])
    if not args.no_plot:
        from .plotting import render_skyline
        for d in result.subjects:
            name = "skyline.png" if len(result.subjects) == 1 else f"skyline_{d.subject_id}.png"
            render_skyline(d, sky_cfg, out / name)

    anomalies = result.anomalies
    print(f"{len(result.instances)} instances of {len(library)} library patterns")
    print(f"FEW intervals: {len(anomalies)}; longest: {_fmt_duration(result.longest_anomaly())}")
    for subject, a in anomalies:
        start = dt.datetime.fromtimestamp(a.start, tz=dt.timezone.utc)
        end = dt.datetime.fromtimestamp(a.end, tz=dt.timezone.utc)
        print(f"  {subject}  {start:%Y-%m-%d %H:%M} -> {end:%Y-%m-%d %H:%M}  "
              f"({_fmt_duration(a.duration)})")
    return EXIT_OK


def cmd_detect(args) -> int:
    kb = _load_kb(args)
    library = read_library(args.library)
    return _detect(args, kb, library, args.input, _out_dir(args))


def cmd_run(args) -> int:
    kb = _load_kb(args)
    out = _out_dir(args)
    _train(args, kb, out)
    library = read_library(out / "library.json")
    return _detect(args, kb, library, args.test, out)


def cmd_synth(args) -> int:
    from . import synthetic
    from .ingest import write_samples

    out = _out_dir(args)
    corrupt = [dt.date.fromisoformat(d) for d in args.corrupt_day]
    train_samples = synthetic.planted_samples(synthetic.TRAIN_START, 7,
                                              extra_concepts=args.extra_concepts)
    test_samples = synthetic.planted_samples(synthetic.TEST_START, 7, corrupt_days=corrupt,
                                             extra_concepts=args.extra_concepts)
    write_samples(out / "train.csv", train_samples)
    write_samples(out / "test.csv", test_samples)
    dump_knowledge_base(synthetic.planted_knowledge_base(args.extra_concepts), out / "kb.yaml")
    print(f"wrote {out / 'train.csv'}, {out / 'test.csv'} and {out / 'kb.yaml'}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tamine", description="Mine normal temporal patterns from server "
                     "metrics and flag the time spans where they are missing.",
                     epilog="exit codes: 0 ok, 1 usage, 2 data error, 3 configuration error")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(p, config=True, out=True):
        if config:
            p.add_argument("--config", help="knowledge base YAML file")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    def data(p, flag="--input"):
        p.add_argument(flag, help="metrics CSV (subject_id,concept_id,timestamp,value)")
        p.add_argument("--weekdays-only", action="store_true",
                       help="drop samples falling on Saturday or Sunday")

    def mining(p):
        p.add_argument("--mode", choices=[m.value for m in Mode],
                       help="instance selection while mining (default: most-recent)")
        p.add_argument("--max-window", type=_duration, help="e.g. 10h")
        p.add_argument("--before-gap", type=_duration, help="longest gap inside 'before'")
        p.add_argument("--coverage-days", type=int, help="min distinct days with an instance")
        p.add_argument("--coverage-seconds", type=_duration, help="min summed envelope time")
        p.add_argument("--min-support", type=int, help="min instances per subject")
        p.add_argument("--min-vertical", type=float, help="min fraction of subjects")
        p.add_argument("--sizes", type=_sizes, help="pattern sizes to keep, e.g. 2,3")

    def selection(p):
        p.add_argument("--top-k", type=int, help="keep only the k best supported patterns")
        p.add_argument("--interactive", action="store_true",
                       help="confirm each pattern on the terminal")

    def skyline(p):
        p.add_argument("--bin", type=_duration, help="skyline bin width, e.g. 1h")
        p.add_argument("--min-anomaly", type=_duration, help="shortest FEW interval to report")
        p.add_argument("--count", choices=["patterns", "instances"],
                       help="bin fraction from distinct patterns (default) or raw instances")
        p.add_argument("--timeline", nargs=2, type=_timestamp, metavar=("START", "END"),
                       help="skyline span for every subject (epoch seconds or ISO-8601)")
        p.add_argument("--no-plot", action="store_true", help="skip skyline.png")

    p = sub.add_parser("abstract", help="raw CSV -> item-list file")
    common(p)
    data(p)
    p.set_defaults(func=cmd_abstract)

    p = sub.add_parser("mine", help="item lists -> all frequent patterns")
    common(p)
    data(p)
    p.add_argument("--items", help="item-list file written by 'abstract'")
    mining(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("train", help="raw CSV -> pattern library (abstract, mine, select)")
    common(p)
    data(p)
    mining(p)
    selection(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("match", help="find library pattern instances")
    common(p)
    data(p)
    p.add_argument("--items", help="item-list file written by 'abstract'")
    p.add_argument("--library", required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], help="default: all")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("detect", help="match a library on test data and report FEW intervals")
    common(p)
    data(p)
    p.add_argument("--library", required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], help="default: all")
    skyline(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("run", help="train on one CSV, detect on another")
    common(p)
    p.add_argument("--train", required=True, help="training metrics CSV")
    p.add_argument("--test", required=True, help="test metrics CSV")
    p.add_argument("--weekdays-only", action="store_true",
                   help="drop Saturday and Sunday samples from both files")
    mining(p)
    selection(p)
    p.add_argument("--match-mode", choices=[m.value for m in Mode],
                   help="instance mode on the test data (default: all)")
    skyline(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="write the planted-pattern fixture")
    common(p, config=False)
    p.add_argument("--corrupt-day", action="append", default=[], metavar="YYYY-MM-DD",
                   help="day of the test week replaced by a flat profile")
    p.add_argument("--extra-concepts", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tamine: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError, ConfigError) as exc:
        print(f"tamine: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, EmptyLibraryError, OSError) as exc:
        print(f"tamine: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TamineError as exc:
        print(f"tamine: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
