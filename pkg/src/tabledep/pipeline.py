"""Corpus ingestion: classify, expand, mine dependencies, build the store."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .deps import DEFAULT_MAX_KEY_SIZE, mine_corpus
from .expand import ExpansionError, expand
from .families import FamilyModel, FamilyParams
from .ingest import LoadedDocument
from .model import CompactTable, DocumentRef, FlatTable, TableDependencies
from .store import TripleStore, add_documents, to_triples

log = logging.getLogger(__name__)

DEFAULT_POSTERIOR_THRESHOLD = 0.3


@dataclass
class TableReport:
    table_id: str
    document_id: str
    family: str
    posterior: float | None
    arity: int
    rows: int
    keys: int = 0
    inclusions: int = 0
    expanded_as: str = ""
    fallback: bool = False

    def to_json(self) -> dict:
        return {
            "table_id": self.table_id,
            "document_id": self.document_id,
            "family": self.family,
            "posterior": None if self.posterior is None else round(self.posterior, 6),
            "arity": self.arity,
            "rows": self.rows,
            "keys": self.keys,
            "inclusions": self.inclusions,
            "expanded_as": self.expanded_as,
            "fallback": self.fallback,
        }


def plain_params(table: CompactTable) -> FamilyParams:
    return FamilyParams("plain", 1 if table.n_rows > 1 else 0, 0, table.n_cols)


def choose_params(table: CompactTable, model: FamilyModel | None,
                  registry: dict[str, FamilyParams],
                  threshold: float = DEFAULT_POSTERIOR_THRESHOLD) -> tuple[FamilyParams, str, float | None, bool]:
    """Expansion parameters for ``table``: (params, family, posterior, fell_back)."""
    if model is None:
        return plain_params(table), "plain", None, True
    family, posterior = model.classify(table)
    params = registry.get(family) or model.params_for(family)
    if posterior < threshold:
        log.warning("%s: family %s has posterior %.3f below %.2f; expanding as plain",
                    table.table_id, family, posterior, threshold)
        return plain_params(table), family, posterior, True
    if params is None and family == "plain":
        return plain_params(table), family, posterior, False
    if params is None:
        log.warning("%s: family %s has no registry entry; expanding as plain", table.table_id, family)
        return plain_params(table), family, posterior, True
    return params, family, posterior, False


def expand_table(table: CompactTable, model: FamilyModel | None,
                 registry: dict[str, FamilyParams],
                 threshold: float = DEFAULT_POSTERIOR_THRESHOLD) -> tuple[FlatTable, TableReport]:
    params, family, posterior, fallback = choose_params(table, model, registry, threshold)
    try:
        flat = expand(table, params)
    except ExpansionError as exc:
        log.warning("%s: %s; expanding as plain", table.table_id, exc)
        params, fallback = plain_params(table), True
        flat = expand(table, params)
    report = TableReport(table.table_id, table.document_id, family, posterior,
                         flat.arity, len(flat.rows), expanded_as=params.family_name,
                         fallback=fallback)
    return flat, report


@dataclass
class IngestResult:
    store: TripleStore
    tables: list[FlatTable] = field(default_factory=list)
    dependencies: dict[str, TableDependencies] = field(default_factory=dict)
    reports: list[TableReport] = field(default_factory=list)


def ingest_documents(docs: Sequence[LoadedDocument], registry: dict[str, FamilyParams],
                     model: FamilyModel | None = None,
                     threshold: float = DEFAULT_POSTERIOR_THRESHOLD,
                     max_key_size: int = DEFAULT_MAX_KEY_SIZE,
                     per_document: bool = False) -> IngestResult:
    flats: list[FlatTable] = []
    reports: list[TableReport] = []
    refs: dict[str, DocumentRef] = {}
    for d in docs:
        refs[d.document.document_id] = d.document
        for t in d.tables:
            flat, report = expand_table(t, model, registry, threshold)
            flats.append(flat)
            reports.append(report)
    deps = mine_corpus(flats, max_key_size=max_key_size, per_document=per_document)
    store = TripleStore()
    add_documents(store, refs.values())
    for flat, report in zip(flats, reports):
        td = deps[flat.table_id]
        report.keys = len(td.keys)
        report.inclusions = len(td.inclusions)
        store.add_all(to_triples(refs[flat.document_id], flat, td.all))
    return IngestResult(store.freeze(), flats, deps, reports)
