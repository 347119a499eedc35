"""Schemaless query answering over the triple store.

A query names values it knows, optionally the attributes they belong to,
the attributes it wants back, and a caption hint. Nothing about table
layout is required. Single-table answering scores every row that matches
at least one value; multi-table answering completes table keys by
following inclusion dependencies into other tables.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Sequence

from .model import split_attribute_id, split_row_id
from .store import ATTRIBUTE, TripleStore
from .textindex import match_score

FULL = "full"
INCOMPLETE = "incomplete"
DEFAULT_WEIGHTS = {"caption": 1.0, "projection": 1.0, "condition": 1.0}


class QueryError(ValueError):
    """Invalid query (maps to a 4xx / usage-level error)."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message if position is None else f"{message} (at char {position})")
        self.position = position


class DisambiguationError(ValueError):
    pass


@dataclass(frozen=True)
class Condition:
    value: str
    attribute_name: str | None = None


@dataclass(frozen=True)
class Query:
    conditions: tuple[Condition, ...]
    table_caption: str | None = None
    projection: tuple[str, ...] = ()
    weights: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "conditions", tuple(self.conditions))
        object.__setattr__(self, "projection", tuple(self.projection))
        if isinstance(self.weights, dict):
            object.__setattr__(self, "weights", tuple(sorted(self.weights.items())))
        if not self.conditions:
            raise QueryError("a query needs at least one condition")
        for c in self.conditions:
            if not isinstance(c.value, str) or not c.value.strip():
                raise QueryError("every condition needs a nonempty value")
        for k, w in self.weights:
            if k not in DEFAULT_WEIGHTS:
                raise QueryError(f"unknown weight {k!r}")
            if w < 0:
                raise QueryError(f"weight {k!r} must be >= 0")

    def weight(self, kind: str) -> float:
        return dict(self.weights).get(kind, DEFAULT_WEIGHTS[kind])


def _conditions_from_json(items) -> tuple[Condition, ...]:
    if not isinstance(items, list):
        raise QueryError("conditions must be a list")
    out = []
    for c in items:
        if not isinstance(c, dict):
            raise QueryError("each condition must be an object")
        value = c.get("value")
        if not isinstance(value, str):
            raise QueryError("each condition needs a string value")
        name = c.get("attribute_name")
        if name is not None and not isinstance(name, str):
            raise QueryError("attribute_name must be a string")
        out.append(Condition(value, name or None))
    return tuple(out)


def _string_list(obj, key: str) -> tuple[str, ...]:
    items = obj.get(key) or []
    if not isinstance(items, list) or not all(isinstance(x, str) for x in items):
        raise QueryError(f"{key} must be a list of strings")
    return tuple(items)


def query_from_json(obj) -> tuple[Query, bool]:
    """Parse the wire format. Returns the query and whether it is a
    multi-table (``targets``) request."""
    if not isinstance(obj, dict):
        raise QueryError("query must be a JSON object")
    if "conditions" not in obj:
        raise QueryError("missing conditions")
    caption = obj.get("table_caption")
    if caption is not None and not isinstance(caption, str):
        raise QueryError("table_caption must be a string")
    weights = obj.get("weights") or {}
    if not isinstance(weights, dict) or not all(isinstance(v, (int, float)) for v in weights.values()):
        raise QueryError("weights must map aspect names to numbers")
    multi = "targets" in obj
    projection = _string_list(obj, "targets" if multi else "projection")
    q = Query(_conditions_from_json(obj["conditions"]), caption or None, projection,
              {k: float(v) for k, v in weights.items()})
    return q, multi


def parse_query(text: str | bytes) -> tuple[Query, bool]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QueryError(f"malformed JSON: {exc.msg}", exc.pos) from exc
    return query_from_json(obj)


@dataclass
class RankedRow:
    row_id: str
    table_id: str
    document_id: str | None
    pages: tuple[int, int] | None
    score: float
    sub_scores: dict[str, float]
    projected: dict[str, str]
    cells: dict[str, str]
    completeness: str = FULL
    provenance: tuple[str, ...] = ()
    retrieved: dict[str, str] = field(default_factory=dict)

    def sort_key(self) -> tuple:
        return (-self.score, self.table_id, split_row_id(self.row_id)[1])

    def to_json(self) -> dict:
        out = {
            "row_id": self.row_id,
            "table_id": self.table_id,
            "document_id": self.document_id,
            "score": round(self.score, 6),
            "completeness": self.completeness,
            "projected": self.projected,
            "cells": self.cells,
        }
        if self.pages is not None:
            out["pages"] = list(self.pages)
        if self.provenance:
            out["provenance"] = list(self.provenance)
        if self.retrieved:
            out["retrieved"] = self.retrieved
        return out


@dataclass(frozen=True)
class RetrievedValue:
    value: str
    provenance: tuple[str, ...]


class QueryEngine:
    """Read-only query evaluation over a frozen store.

    Holds only memo tables derived from the store; safe to share between
    threads since every cached value is a pure function of the store.
    """

    def __init__(self, store: TripleStore):
        if not store.frozen:
            store.freeze()
        self.store = store
        self._attributes = set(store.instances(ATTRIBUTE))
        self._value_hits: dict[str, dict[tuple[str, str], float]] = {}
        self._display: dict[str, dict[str, str]] = {}

    # -- matching primitives

    def cell_hits(self, value: str) -> dict[tuple[str, str], float]:
        """(row, attribute) -> fuzzy match score for cells matching ``value``."""
        hits = self._value_hits.get(value)
        if hits is None:
            hits = {}
            for t, s in self.store.search(value, "fuzzy"):
                if t.predicate in self._attributes:
                    hits[(t.subject, t.predicate)] = s
            self._value_hits[value] = hits
        return hits

    def label_score(self, descriptor: str, attribute_id: str) -> float:
        best = 0.0
        for text in (self.store.label(attribute_id), self.store.parent_label(attribute_id)):
            if text:
                best = max(best, match_score(descriptor, text))
        return best

    def best_attribute(self, descriptor: str, table_id: str) -> tuple[str | None, float]:
        best, score = None, 0.0
        for a in self.store.attributes(table_id):
            s = self.label_score(descriptor, a)
            if s > score:
                best, score = a, s
        return best, score

    def display_names(self, table_id: str) -> dict[str, str]:
        names = self._display.get(table_id)
        if names is None:
            attrs = self.store.attributes(table_id)
            labels = [self.store.label(a) for a in attrs]
            names = {}
            for a, lab in zip(attrs, labels):
                names[a] = lab if lab and labels.count(lab) == 1 else a
            self._display[table_id] = names
        return names

    def table_hits(self, table_id: str, conditions: Sequence[Condition]) -> int:
        """Number of condition values that fuzzy-match some cell of the table."""
        rows = set(self.store.rows(table_id))
        return sum(1 for c in conditions
                   if any(r in rows for r, _ in self.cell_hits(c.value)))

    # -- single table

    def query_single_table(self, q: Query, restrict_table: str | None = None,
                           require_all: bool = False,
                           required: dict[str, Sequence[str]] | None = None) -> list[RankedRow]:
        """Rank rows matching at least one condition value.

        ``require_all`` keeps only rows where every condition value matched
        some cell; ``required`` maps attribute ids to values, one of which
        must match that attribute's cell.
        """
        per_cond: list[dict[str, float]] = []
        value_rows: list[set[str]] = []
        for c in q.conditions:
            hits = self.cell_hits(c.value)
            scores: dict[str, float] = {}
            rows: set[str] = set()
            for (row, attr), s in hits.items():
                rows.add(row)
                if c.attribute_name:
                    s = s * self.label_score(c.attribute_name, attr)
                if s > scores.get(row, 0.0):
                    scores[row] = s
            per_cond.append(scores)
            value_rows.append(rows)

        if require_all:
            candidates = set.intersection(*value_rows) if value_rows else set()
        else:
            candidates = set().union(*value_rows)
        if restrict_table is not None:
            allowed = set(self.store.rows(restrict_table))
            candidates &= allowed
        if required:
            for attr, values in required.items():
                ok = set()
                for v in values:
                    ok |= {row for (row, a) in self.cell_hits(v) if a == attr}
                candidates &= ok

        out = []
        for row in candidates:
            out.append(self._score_row(q, row, per_cond))
        out.sort(key=RankedRow.sort_key)
        return out

    def _score_row(self, q: Query, row: str, per_cond: list[dict[str, float]]) -> RankedRow:
        st = self.store
        tid = st.table_of_row(row)
        cells = st.cells(row)
        subs: dict[str, float] = {}
        total = 0.0
        if q.table_caption:
            cap = st.value(tid, "hasCaption")
            s = match_score(q.table_caption, cap) if cap else 0.0
            subs["caption"] = s
            total += q.weight("caption") * s
        projected = {}
        for i, d in enumerate(q.projection):
            attr, s = self.best_attribute(d, tid)
            subs[f"projection[{i}]"] = s
            total += q.weight("projection") * s
            if attr is not None:
                projected[d] = cells[attr]
        for i, scores in enumerate(per_cond):
            s = scores.get(row, 0.0)
            subs[f"condition[{i}]"] = s
            total += q.weight("condition") * s
        names = self.display_names(tid)
        meta_pb, meta_pe = st.value(tid, "pageNumBegin"), st.value(tid, "pageNumEnd")
        pages = (meta_pb, meta_pe if meta_pe is not None else meta_pb) if meta_pb is not None else None
        return RankedRow(
            row_id=row,
            table_id=tid,
            document_id=st.document_of(tid),
            pages=pages,
            score=total,
            sub_scores=subs,
            projected=projected,
            cells={names[a]: v for a, v in cells.items()},
        )

    # -- multi table

    def retrieve_values(self, table_id: str, unknown_component: str,
                        values: Sequence[Condition]) -> list[RetrievedValue]:
        """Candidate values for a key component, found by following its
        inclusion dependencies to rows that match ``values``."""
        if split_attribute_id(unknown_component)[0] != table_id:
            raise QueryError(f"{unknown_component} is not an attribute of {table_id}")
        if not values:
            return []
        found: dict[str, list[str]] = {}
        for dep in self.store.inclusions_from(unknown_component):
            for pair in dep.pairs:
                if pair.first != unknown_component:
                    continue
                dep_table = split_attribute_id(pair.second)[0]
                rows = self.query_single_table(Query(tuple(values)), restrict_table=dep_table,
                                               require_all=True)
                for r in rows:
                    v = self.store.cells(r.row_id)[pair.second]
                    prov = found.setdefault(v, [])
                    if r.row_id not in prov:
                        prov.append(r.row_id)
        return [RetrievedValue(v, tuple(p)) for v, p in found.items()]

    def _known_components(self, table_id: str, key_attrs: Sequence[str],
                          conditions: Sequence[Condition]) -> dict[str, list[Condition]]:
        rows = set(self.store.rows(table_id))
        known: dict[str, list[Condition]] = {}
        for a in key_attrs:
            for c in conditions:
                in_column = any(r in rows and attr == a for (r, attr) in self.cell_hits(c.value))
                named = bool(c.attribute_name) and self.label_score(c.attribute_name, a) > 0
                if in_column or named:
                    known.setdefault(a, []).append(c)
        return known

    def query_multi_table(self, goal_labels: Sequence[str],
                          input_values: Sequence[Condition],
                          weights: dict[str, float] | None = None) -> list[RankedRow]:
        if not input_values:
            raise QueryError("multi-table queries need at least one input value")
        base = Query(tuple(input_values), None, tuple(goal_labels), weights or {})

        results = self.query_single_table(base, require_all=True)
        if results:
            return results

        tables = [t for t in self.store.tables()
                  if any(self.best_attribute(g, t)[1] > 0 for g in goal_labels)]
        tables.sort(key=lambda t: (-self.table_hits(t, input_values), t))

        merged: dict[str, RankedRow] = {}
        for table in tables:
            for key in self.store.keys(table):
                comps = sorted(key.attributes, key=lambda a: split_attribute_id(a)[1])
                known = self._known_components(table, comps, input_values)
                unknown = [a for a in comps if a not in known]
                used = {c for cs in known.values() for c in cs}
                remaining = [c for c in input_values if c not in used]
                options: list[list[RetrievedValue]] = []
                for comp in unknown:
                    options.append(self.retrieve_values(table, comp, remaining))
                if any(not o for o in options):
                    continue
                for choice in product(*options):
                    required = {a: [c.value for c in cs] for a, cs in known.items()}
                    for comp, rv in zip(unknown, choice):
                        required[comp] = [rv.value]
                    extra = tuple(Condition(rv.value) for rv in choice)
                    q = replace(base, conditions=base.conditions + extra)
                    rows = self.query_single_table(q, restrict_table=table, required=required)
                    prov = tuple(dict.fromkeys(p for rv in choice for p in rv.provenance))
                    for r in rows:
                        r.provenance = prov
                        r.retrieved = {self.display_names(table)[c]: rv.value
                                       for c, rv in zip(unknown, choice)}
                        prev = merged.get(r.row_id)
                        if prev is None or r.score > prev.score:
                            merged[r.row_id] = r
        if merged:
            return sorted(merged.values(), key=RankedRow.sort_key)

        fallback = self.query_single_table(base)
        for r in fallback:
            r.completeness = INCOMPLETE
        return fallback

    # -- disambiguation

    def suggest_disambiguation(self, q: Query, results: Sequence[RankedRow]) -> list[str]:
        """Smallest set of unbound key attributes whose values tell the
        result rows apart. Returns attribute ids."""
        if len(results) <= 1:
            return []
        tables = {r.table_id for r in results}
        if len(tables) > 1:
            raise DisambiguationError(
                "results come from several tables; narrow the query with table_caption first")
        (table,) = tables
        attrs = self.store.attributes(table)
        rows = [self.store.cells(r.row_id) for r in results]
        bound = set()
        for c in q.conditions:
            for a in attrs:
                if all(self.cell_hits(c.value).get((r.row_id, a), 0) > 0 for r in results):
                    bound.add(a)
                if c.attribute_name and self.label_score(c.attribute_name, a) > 0:
                    bound.add(a)
        key_attrs = sorted({a for k in self.store.keys(table) for a in k.attributes} or set(attrs),
                           key=lambda a: split_attribute_id(a)[1])
        pool = [a for a in key_attrs if a not in bound]

        def separates(subset: Sequence[str]) -> bool:
            seen = {tuple(row[a] for a in subset) for row in rows}
            return len(seen) == len(rows)

        if not separates(attrs):
            raise DisambiguationError("not disambiguable: result rows are identical")
        for size in range(1, min(3, len(pool)) + 1):
            for subset in combinations(pool, size):
                if separates(subset):
                    return list(subset)
        return _greedy_separator(rows, pool if separates(pool) else list(attrs))


def _greedy_separator(rows: Sequence[dict[str, str]], pool: Sequence[str]) -> list[str]:
    """Greedy set cover over row pairs: add the attribute splitting the most
    still-unsplit pairs until every pair is split."""
    pairs = {(i, j) for i in range(len(rows)) for j in range(i + 1, len(rows))}
    chosen: list[str] = []
    while pairs:
        best = max(pool, key=lambda a: (sum(rows[i][a] != rows[j][a] for i, j in pairs),
                                        -split_attribute_id(a)[1]))
        split = {(i, j) for i, j in pairs if rows[i][best] != rows[j][best]}
        if not split:
            raise DisambiguationError("not disambiguable with the available attributes")
        chosen.append(best)
        pairs -= split
    return chosen


# -- module-level API

def query_single_table(store: TripleStore, q: Query, restrict_table: str | None = None,
                       require_all: bool = False) -> list[RankedRow]:
    return QueryEngine(store).query_single_table(q, restrict_table, require_all)


def query_multi_table(store: TripleStore, goal_labels: Sequence[str],
                      input_values: Sequence[Condition]) -> list[RankedRow]:
    return QueryEngine(store).query_multi_table(goal_labels, input_values)


def retrieve_values(store: TripleStore, table: str, unknown_component: str,
                    values: Sequence[Condition]) -> list[RetrievedValue]:
    return QueryEngine(store).retrieve_values(table, unknown_component, values)


def suggest_disambiguation(store: TripleStore, q: Query, results: Sequence[RankedRow]) -> list[str]:
    return QueryEngine(store).suggest_disambiguation(q, results)


def answer(engine: QueryEngine, q: Query, multi: bool = False, limit: int | None = None) -> dict:
    """Evaluate a parsed query and build the result document."""
    if multi:
        rows = engine.query_multi_table(q.projection, q.conditions, dict(q.weights))
    else:
        rows = engine.query_single_table(q)
    suggestions: list[str] = []
    if len(rows) > 1:
        top = [r for r in rows if r.score == rows[0].score]
        if len(top) > 1 and len({r.table_id for r in top}) == 1:
            try:
                ids = engine.suggest_disambiguation(q, top)
            except DisambiguationError:
                ids = []
            names = engine.display_names(top[0].table_id)
            suggestions = [names[a] for a in ids]
    if limit is not None:
        rows = rows[:limit]
    return {"answers": [r.to_json() for r in rows], "suggestions": suggestions}


def dumps_result(result: dict) -> str:
    return json.dumps(result, ensure_ascii=False, sort_keys=True)
