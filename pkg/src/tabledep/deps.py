"""Mining minimal keys and unary inclusion dependencies over flat tables."""
from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

from .model import (
    AttributePair,
    CompositeKey,
    FlatTable,
    InclusionDependency,
    Key,
    TableDependencies,
    key_for,
    key_sort_key,
    split_attribute_id,
)

DEFAULT_MAX_KEY_SIZE = 4
DEFAULT_MIN_SUPPORT = 2


def _distinct_count(rows: Sequence[tuple[str, ...]], cols: Sequence[int]) -> int:
    return len({tuple(r[c] for c in cols) for r in rows})


def mine_keys(table: FlatTable, max_key_size: int = DEFAULT_MAX_KEY_SIZE) -> set[Key | CompositeKey]:
    """All minimal keys of at most ``max_key_size`` attributes.

    Level-wise search over the attribute lattice on the deduplicated
    instance; any superset of a key already found is pruned.
    """
    if max_key_size < 1:
        raise ValueError("max_key_size must be >= 1")
    rows = table.distinct_rows()
    if not rows:
        return set()
    target = len(rows)
    n = table.arity
    found: list[frozenset[int]] = []
    for size in range(1, min(max_key_size, n) + 1):
        for combo in combinations(range(n), size):
            cs = frozenset(combo)
            if any(k <= cs for k in found):
                continue
            if _distinct_count(rows, combo) == target:
                found.append(cs)
    ids = [a.attribute_id for a in table.attributes]
    return {key_for(ids[c] for c in k) for k in found}


def sorted_keys(keys: Iterable[Key | CompositeKey]) -> list[Key | CompositeKey]:
    return sorted(keys, key=key_sort_key)


def _value_sets(table: FlatTable) -> list[frozenset[str]]:
    return [frozenset(r[c] for r in table.rows) for c in range(table.arity)]


def mine_inclusion_deps(corpus: Sequence[FlatTable], min_support: int = DEFAULT_MIN_SUPPORT,
                        per_document: bool = False) -> set[InclusionDependency]:
    """Unary inclusion dependencies a ⊆ b between columns of different tables.

    A dependency is a foreign key when {b} is a key of b's table.
    ``per_document`` restricts pairs to tables of the same document.
    """
    columns = []
    for t in corpus:
        sets = _value_sets(t)
        n_distinct = len(t.distinct_rows())
        for a, values in zip(t.attributes, sets):
            unique = _distinct_count(t.rows, [a.ordinal]) == n_distinct and n_distinct > 0
            columns.append((t, a.attribute_id, values, unique))

    out = set()
    for src, a_id, a_vals, _ in columns:
        if len(a_vals) < min_support or not any(a_vals):
            continue
        for dst, b_id, b_vals, b_unique in columns:
            if dst.table_id == src.table_id:
                continue
            if per_document and dst.document_id != src.document_id:
                continue
            if a_vals <= b_vals:
                out.add(InclusionDependency((AttributePair(a_id, b_id),), b_unique))
    return out


def mine_corpus(corpus: Sequence[FlatTable], max_key_size: int = DEFAULT_MAX_KEY_SIZE,
                min_support: int = DEFAULT_MIN_SUPPORT,
                per_document: bool = False) -> dict[str, TableDependencies]:
    """Keys per table plus inclusion dependencies grouped by source table."""
    out = {t.table_id: TableDependencies(t.table_id, sorted_keys(mine_keys(t, max_key_size)))
           for t in corpus}
    inds = mine_inclusion_deps(corpus, min_support, per_document) if len(corpus) >= 2 else set()
    for ind in sorted(inds, key=lambda d: (d.pairs[0].first, d.pairs[0].second)):
        out[ind.source_table].inclusions.append(ind)
    return out


def dependencies_to_json(deps: TableDependencies) -> dict:
    def by_ordinal(a: str):
        t, k = split_attribute_id(a)
        return (t, k)

    return {
        "table_id": deps.table_id,
        "keys": [sorted(k.attributes, key=by_ordinal) for k in deps.keys],
        "inclusions": [
            {"from": p.first, "to": p.second, "foreign_key": d.is_foreign_key}
            for d in deps.inclusions for p in d.pairs
        ],
    }
