"""Domain knowledge: per-concept state bins, duration classes, pattern library.

The knowledge base lives in a YAML file::

    concepts:
      CPUUser:
        state_bins:            # [lower, upper, symbol]; lower inclusive, upper exclusive
          - [-inf, 15, VERY_LOW]
          - [15, 35, LOW]
          - [35, inf, HIGH]
        gradient_epsilon: 0.0  # value units per second
        max_gap_seconds: 120   # omit for 2x the median sampling period
    duration_classes:          # [inclusive upper bound in seconds, symbol]
      - [10, VERY-SHORT]
      - [60, SHORT]
      - [900, MEDIUM]
      - [3600, LONG]
      - [inf, VERY-LONG]
    skyline:
      bin_seconds: 3600
      few_threshold: 0.1
      many_threshold: 0.3
    mining:                    # optional, any MiningConfig field
      max_window: 36000
    pattern_library: []        # optional inline patterns

Durations may be given as plain seconds or with an ``s``/``m``/``h``/``d``
suffix (``"15m"``).  ``inf``/``-inf`` may be written as YAML ``.inf`` or as
strings.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import yaml

from .abstraction import GRADIENT_SYMBOLS, Kind
from .errors import ConfigError, ParseError, ValidationError
from .mining import MiningConfig, Pattern
from .skyline import SkylineConfig

INF = math.inf

_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400}
_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([smhd]?)\s*$")


def parse_duration(text) -> float:
    """``"90"`` -> 90, ``"15m"`` -> 900, ``"10h"`` -> 36000; ``inf`` passes through."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("inf", "+inf", ".inf", "infinity"):
        return INF
    m = _DURATION_RE.match(s)
    if not m:
        raise ValueError(f"not a duration: {text!r}")
    value = float(m.group(1)) * _UNITS[m.group(2) or "s"]
    return int(value) if value.is_integer() else value


def _bound(x) -> float:
    if isinstance(x, bool):
        raise ValueError(f"not a bound: {x!r}")
    if isinstance(x, (int, float)):
        return x
    return float(str(x).strip().lstrip(".").replace("-.", "-"))


@dataclass(frozen=True)
class StateBin:
    lower: float
    upper: float
    symbol: str


@dataclass(frozen=True)
class ConceptDefinition:
    concept_id: str
    state_bins: tuple[StateBin, ...]
    gradient_epsilon: float = 0.0
    max_interpolation_gap: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "state_bins", tuple(
            b if isinstance(b, StateBin) else StateBin(*b) for b in self.state_bins))
        bins = self.state_bins
        where = f"concept {self.concept_id!r}"
        if not self.concept_id:
            raise ValidationError("concept id must be non-empty")
        if not bins:
            raise ValidationError(f"{where}: no state bins")
        if bins[0].lower != -INF or bins[-1].upper != INF:
            raise ValidationError(f"{where}: state bins must cover (-inf, +inf)")
        for b in bins:
            if not b.lower < b.upper:
                raise ValidationError(f"{where}: empty state bin {b}")
        for a, b in zip(bins, bins[1:]):
            if b.lower < a.upper:
                raise ValidationError(f"{where}: overlapping state bins {a} and {b}")
            if b.lower > a.upper:
                raise ValidationError(f"{where}: gap between state bins {a} and {b}")
        symbols = [b.symbol for b in bins]
        if len(set(symbols)) != len(symbols) or not all(symbols):
            raise ValidationError(f"{where}: state symbols must be distinct and non-empty")
        if not self.gradient_epsilon >= 0:
            raise ValidationError(f"{where}: gradient_epsilon must be >= 0")
        if self.max_interpolation_gap is not None and not self.max_interpolation_gap > 0:
            raise ValidationError(f"{where}: max_gap_seconds must be > 0")

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(b.symbol for b in self.state_bins)

    @classmethod
    def from_thresholds(cls, concept_id: str, thresholds: Sequence[float], symbols: Sequence[str],
                        **kwargs) -> "ConceptDefinition":
        """Bins split at ``thresholds``; ``len(symbols) == len(thresholds) + 1``."""
        if len(symbols) != len(thresholds) + 1:
            raise ValidationError("need exactly one more symbol than thresholds")
        edges = [-INF, *thresholds, INF]
        bins = tuple(StateBin(lo, hi, s) for lo, hi, s in zip(edges, edges[1:], symbols))
        return cls(concept_id, bins, **kwargs)


@dataclass(frozen=True)
class DurationClassification:
    boundaries: tuple[tuple[float, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple((u, s) for u, s in self.boundaries))
        b = self.boundaries
        if len(b) < 2:
            raise ValidationError("duration classification needs at least 2 classes")
        if b[-1][0] != INF:
            raise ValidationError("the last duration class must be unbounded")
        if any(x[0] >= y[0] for x, y in zip(b, b[1:])):
            raise ValidationError("duration upper bounds must be strictly increasing")
        symbols = [s for _, s in b]
        if len(set(symbols)) != len(symbols) or not all(symbols):
            raise ValidationError("duration class symbols must be distinct and non-empty")
        if b[0][0] < 0:
            raise ValidationError("duration upper bounds must be >= 0")

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s for _, s in self.boundaries)


DEFAULT_DURATION_CLASSES = DurationClassification((
    (10, "VERY-SHORT"),
    (60, "SHORT"),
    (900, "MEDIUM"),
    (3600, "LONG"),
    (INF, "VERY-LONG"),
))

# the three-class example configuration: SHORT <= 60 s < MEDIUM <= 15 min < LONG
THREE_DURATION_CLASSES = DurationClassification(((60, "SHORT"), (900, "MEDIUM"), (INF, "LONG")))


@dataclass(frozen=True)
class KnowledgeBase:
    concepts: Mapping[str, ConceptDefinition]
    duration_classes: DurationClassification = DEFAULT_DURATION_CLASSES
    pattern_library: tuple[Pattern, ...] = ()
    skyline_config: SkylineConfig = field(default_factory=SkylineConfig)
    mining_config: MiningConfig = field(default_factory=MiningConfig)

    def __post_init__(self):
        object.__setattr__(self, "concepts", dict(sorted(self.concepts.items())))
        object.__setattr__(self, "pattern_library", tuple(self.pattern_library))
        for cid, c in self.concepts.items():
            if cid != c.concept_id:
                raise ValidationError(f"concept key {cid!r} != concept_id {c.concept_id!r}")

    def with_library(self, patterns) -> "KnowledgeBase":
        return KnowledgeBase(self.concepts, self.duration_classes, tuple(patterns),
                             self.skyline_config, self.mining_config)

    def fact_symbols(self, concept_name: str) -> tuple[str, ...] | None:
        """Valid values of a ``<Concept>_<KIND>`` fact name, or None if unknown."""
        cid, _, suffix = concept_name.rpartition("_")
        concept = self.concepts.get(cid)
        if concept is None:
            return None
        if suffix == Kind.STATE.suffix:
            return concept.symbols
        if suffix == Kind.GRADIENT.suffix:
            return GRADIENT_SYMBOLS
        return None


def validate_pattern_library(kb: KnowledgeBase) -> list[str]:
    violations = []
    durations = set(kb.duration_classes.symbols)
    for n, pattern in enumerate(kb.pattern_library):
        for fact in pattern.facts:
            symbols = kb.fact_symbols(fact.concept_name)
            if symbols is None:
                violations.append(f"pattern {n}: unknown concept {fact.concept_name!r}")
                continue
            if fact.value not in symbols:
                violations.append(
                    f"pattern {n}: {fact.value!r} is not a symbol of {fact.concept_name!r}")
            if fact.duration_class not in durations:
                violations.append(f"pattern {n}: unknown duration class {fact.duration_class!r}")
    return violations


def _concept_from_dict(cid: str, data: Mapping) -> ConceptDefinition:
    if not isinstance(data, Mapping) or "state_bins" not in data:
        raise ParseError(f"concept {cid!r}: missing state_bins")
    unknown = set(data) - {"state_bins", "gradient_epsilon", "max_gap_seconds"}
    if unknown:
        raise ParseError(f"concept {cid!r}: unknown keys {sorted(unknown)}")
    try:
        bins = tuple(StateBin(_bound(lo), _bound(hi), str(sym)) for lo, hi, sym in data["state_bins"])
        gap = data.get("max_gap_seconds")
        return ConceptDefinition(
            cid, bins, float(data.get("gradient_epsilon", 0.0)),
            None if gap is None else parse_duration(gap))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"concept {cid!r}: {exc}") from None


def knowledge_base_from_dict(doc: Mapping[str, Any]) -> KnowledgeBase:
    if not isinstance(doc, Mapping):
        raise ParseError("knowledge base must be a mapping")
    unknown = set(doc) - {"concepts", "duration_classes", "skyline", "mining", "pattern_library"}
    if unknown:
        raise ParseError(f"unknown top-level keys: {sorted(unknown)}")
    concepts = doc.get("concepts") or {}
    if not isinstance(concepts, Mapping):
        raise ParseError("concepts must be a mapping")
    parsed = {str(cid): _concept_from_dict(str(cid), c) for cid, c in concepts.items()}

    durations = DEFAULT_DURATION_CLASSES
    if doc.get("duration_classes") is not None:
        try:
            durations = DurationClassification(tuple(
                (_bound(parse_duration(u)), str(s)) for u, s in doc["duration_classes"]))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"duration_classes: {exc}") from None

    sky = doc.get("skyline") or {}
    try:
        sky = dict(sky)
        for key in ("bin_seconds", "min_anomaly_duration"):
            if key in sky:
                sky[key] = parse_duration(sky[key])
        skyline_cfg = SkylineConfig(**sky)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"skyline: {exc}") from None

    mining = dict(doc.get("mining") or {})
    for key in ("max_window", "before_max_gap"):
        if mining.get(key) is not None:
            mining[key] = parse_duration(mining[key])
    try:
        mining_cfg = MiningConfig.from_dict(mining)
    except ConfigError as exc:
        raise ParseError(f"mining: {exc}") from None

    library = tuple(Pattern.from_dict(p) for p in doc.get("pattern_library") or ())
    return KnowledgeBase(parsed, durations, library, skyline_cfg, mining_cfg)


def _fmt_bound(x):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


def knowledge_base_to_dict(kb: KnowledgeBase) -> dict:
    concepts = {}
    for cid, c in kb.concepts.items():
        entry: dict[str, Any] = {
            "state_bins": [[_fmt_bound(b.lower), _fmt_bound(b.upper), b.symbol] for b in c.state_bins],
            "gradient_epsilon": c.gradient_epsilon,
        }
        if c.max_interpolation_gap is not None:
            entry["max_gap_seconds"] = c.max_interpolation_gap
        concepts[cid] = entry
    return {
        "concepts": concepts,
        "duration_classes": [[_fmt_bound(u), s] for u, s in kb.duration_classes.boundaries],
        "skyline": kb.skyline_config.to_dict(),
        "mining": kb.mining_config.to_dict(),
        "pattern_library": [p.to_dict() for p in kb.pattern_library],
    }


def load_knowledge_base(path) -> KnowledgeBase:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from None
    kb = knowledge_base_from_dict(doc or {})
    violations = validate_pattern_library(kb)
    if violations:
        raise ValidationError("; ".join(violations))
    return kb


def dump_knowledge_base(kb: KnowledgeBase, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(knowledge_base_to_dict(kb), fh, sort_keys=False, default_flow_style=None)
