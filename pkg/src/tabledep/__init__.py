"""Compact document tables to flat relations, dependencies and schemaless queries."""
from .model import (
    Attribute,
    AttributePair,
    CompactTable,
    CompositeKey,
    DocumentRef,
    FlatTable,
    InclusionDependency,
    Key,
    project,
)
from .families import FamilyModel, FamilyParams, classify, detect_data_start, extract_features, mask_cell, train
from .expand import expand
from .deps import mine_inclusion_deps, mine_keys
from .store import Triple, TripleStore, to_triples
from .query import Condition, Query, QueryEngine, query_multi_table, query_single_table

__all__ = [
    "Attribute", "AttributePair", "CompactTable", "CompositeKey", "DocumentRef", "FlatTable",
    "InclusionDependency", "Key", "project",
    "FamilyModel", "FamilyParams", "classify", "detect_data_start", "extract_features",
    "mask_cell", "train",
    "expand", "mine_inclusion_deps", "mine_keys",
    "Triple", "TripleStore", "to_triples",
    "Condition", "Query", "QueryEngine", "query_multi_table", "query_single_table",
]

__version__ = "0.1.0"
