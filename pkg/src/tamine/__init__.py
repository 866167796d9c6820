"""Temporal abstraction pattern mining and skyline anomaly detection."""
from .abstraction import AbstractInterval, Interval, Kind, Sample
from .errors import (ConfigError, EmptyLibraryError, FormatError, ParseError, TamineError,
                     UnknownFactWarning, ValidationError)
from .facts import Fact, FactInstance, ItemListDB, build_item_lists
from .knowledge import (ConceptDefinition, DurationClassification, KnowledgeBase,
                        load_knowledge_base)
from .matching import match_patterns
from .mining import (Coverage, MiningConfig, Mode, Pattern, PatternInstance, Relation, mine,
                     read_library, write_library)
from .pipeline import build_db, detect, train
from .skyline import Label, SkylineConfig, skyline

__version__ = "0.1.0"

__all__ = [
    "AbstractInterval", "ConceptDefinition", "ConfigError", "Coverage", "DurationClassification",
    "EmptyLibraryError", "Fact", "FactInstance", "FormatError", "Interval", "ItemListDB", "Kind",
    "KnowledgeBase", "Label", "MiningConfig", "Mode", "ParseError", "Pattern", "PatternInstance",
    "Relation", "Sample", "SkylineConfig", "TamineError", "UnknownFactWarning", "ValidationError",
    "build_db", "build_item_lists", "detect", "load_knowledge_base", "match_patterns", "mine",
    "read_library", "skyline", "train", "write_library",
]
