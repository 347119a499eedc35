"""Core value types shared across the pipeline.

Cell values are raw strings throughout; nothing is typed numerically.
Identifiers follow one deterministic scheme so that attribute, row and
table ids can be derived from one another::

    doc1-table1            table
    doc1-table1-column3    attribute at ordinal 2
    doc1-table1-row7       seventh tuple
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union


class ModelError(ValueError):
    pass


def table_id_for(document_id: str, index: int) -> str:
    return f"{document_id}-table{index}"


def attribute_id_for(table_id: str, ordinal: int) -> str:
    return f"{table_id}-column{ordinal + 1}"


def row_id_for(table_id: str, index: int) -> str:
    return f"{table_id}-row{index}"


def split_attribute_id(attribute_id: str) -> tuple[str, int]:
    """Return ``(table_id, ordinal)`` encoded in an attribute id."""
    table_id, sep, num = attribute_id.rpartition("-column")
    if not sep or not num.isdigit() or int(num) < 1:
        raise ModelError(f"not an attribute id: {attribute_id!r}")
    return table_id, int(num) - 1


def split_row_id(row_id: str) -> tuple[str, int]:
    table_id, sep, num = row_id.rpartition("-row")
    if not sep or not num.isdigit():
        raise ModelError(f"not a row id: {row_id!r}")
    return table_id, int(num)


@dataclass(frozen=True)
class DocumentRef:
    document_id: str
    source_name: str = ""

    def __post_init__(self):
        if not self.document_id:
            raise ModelError("document_id must be nonempty")


@dataclass(frozen=True)
class CompactTable:
    """A normalized (span-free) cell grid as it appeared in a document."""

    table_id: str
    document_id: str
    grid: tuple[tuple[str, ...], ...]
    caption: str | None = None
    label: str | None = None
    page_begin: int | None = None
    page_end: int | None = None
    # id as written in the source file; None when it was generated
    source_id: str | None = None

    def __post_init__(self):
        grid = tuple(tuple(row) for row in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid or not grid[0]:
            raise ModelError(f"{self.table_id}: grid needs at least one row and one column")
        width = len(grid[0])
        for i, row in enumerate(grid):
            if len(row) != width:
                raise ModelError(f"{self.table_id}: row {i} has {len(row)} cells, expected {width}")
        for name in ("page_begin", "page_end"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ModelError(f"{self.table_id}: {name} must be positive")
        if self.page_begin is not None and self.page_end is not None and self.page_begin > self.page_end:
            raise ModelError(f"{self.table_id}: page_begin > page_end")

    @property
    def n_rows(self) -> int:
        return len(self.grid)

    @property
    def n_cols(self) -> int:
        return len(self.grid[0])

    def column(self, c: int) -> list[str]:
        return [row[c] for row in self.grid]


@dataclass(frozen=True)
class Attribute:
    attribute_id: str
    ordinal: int
    label: str | None = None
    parent_label: str | None = None

    @property
    def table_id(self) -> str:
        return split_attribute_id(self.attribute_id)[0]


@dataclass(frozen=True)
class FlatTable:
    table_id: str
    document_id: str
    attributes: tuple[Attribute, ...]
    rows: tuple[tuple[str, ...], ...]
    caption: str | None = None
    label: str | None = None
    page_begin: int | None = None
    page_end: int | None = None
    source_id: str | None = None
    family: str | None = None

    def __post_init__(self):
        attrs = tuple(self.attributes)
        rows = tuple(tuple(r) for r in self.rows)
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "rows", rows)
        for i, a in enumerate(attrs):
            if a.ordinal != i:
                raise ModelError(f"{self.table_id}: attribute {a.attribute_id} has ordinal {a.ordinal}, expected {i}")
        for i, row in enumerate(rows):
            if len(row) != len(attrs):
                raise ModelError(f"{self.table_id}: tuple {i} has arity {len(row)}, expected {len(attrs)}")

    @property
    def arity(self) -> int:
        return len(self.attributes)

    def attribute(self, ref: Union[str, int, Attribute]) -> Attribute:
        """Resolve an attribute by id, ordinal, label, or instance."""
        if isinstance(ref, Attribute):
            ref = ref.attribute_id
        if isinstance(ref, int):
            if 0 <= ref < len(self.attributes):
                return self.attributes[ref]
        else:
            for a in self.attributes:
                if a.attribute_id == ref:
                    return a
            for a in self.attributes:
                if a.label is not None and a.label == ref:
                    return a
        raise ModelError(f"{self.table_id}: unknown attribute {ref!r}")

    def column(self, ref) -> list[str]:
        k = self.attribute(ref).ordinal
        return [row[k] for row in self.rows]

    def distinct_rows(self) -> list[tuple[str, ...]]:
        return list(dict.fromkeys(self.rows))

    def row_ids(self) -> list[str]:
        return [row_id_for(self.table_id, i + 1) for i in range(len(self.rows))]


def make_attributes(table_id: str, labels: Sequence[str | None],
                    parents: Sequence[str | None] | None = None) -> tuple[Attribute, ...]:
    parents = parents if parents is not None else [None] * len(labels)
    return tuple(
        Attribute(attribute_id_for(table_id, k), k, label or None, parent or None)
        for k, (label, parent) in enumerate(zip(labels, parents))
    )


def project(table: FlatTable, attrs: Iterable) -> FlatTable:
    """Restrict ``table`` to ``attrs`` (in the given order), dropping duplicate tuples.

    The result keeps the original attribute ids and labels; ordinals are
    renumbered so the projected relation is itself a valid FlatTable.
    """
    chosen = [table.attribute(a) for a in attrs]
    idx = [a.ordinal for a in chosen]
    seen = dict.fromkeys(tuple(row[k] for k in idx) for row in table.rows)
    new_attrs = tuple(
        Attribute(a.attribute_id, i, a.label, a.parent_label) for i, a in enumerate(chosen)
    )
    return FlatTable(
        table_id=table.table_id,
        document_id=table.document_id,
        attributes=new_attrs,
        rows=tuple(seen),
        caption=table.caption,
        label=table.label,
        page_begin=table.page_begin,
        page_end=table.page_end,
        source_id=table.source_id,
        family=table.family,
    )


@dataclass(frozen=True)
class Key:
    attribute: str

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset([self.attribute])


@dataclass(frozen=True)
class CompositeKey:
    attributes: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "attributes", frozenset(self.attributes))
        if len(self.attributes) < 2:
            raise ModelError("a composite key needs at least two attributes")
        tables = {split_attribute_id(a)[0] for a in self.attributes}
        if len(tables) != 1:
            raise ModelError(f"composite key spans several tables: {sorted(tables)}")


@dataclass(frozen=True)
class AttributePair:
    first: str
    second: str

    def __post_init__(self):
        if self.first == self.second:
            raise ModelError("attribute pair needs two distinct attributes")
        if split_attribute_id(self.first)[0] == split_attribute_id(self.second)[0]:
            raise ModelError(f"attribute pair within one table: {self.first}, {self.second}")


@dataclass(frozen=True)
class InclusionDependency:
    pairs: tuple[AttributePair, ...]
    is_foreign_key: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if not self.pairs:
            raise ModelError("inclusion dependency needs at least one attribute pair")

    @property
    def source_table(self) -> str:
        return split_attribute_id(self.pairs[0].first)[0]


Dependency = Union[Key, CompositeKey, InclusionDependency]


def key_for(attribute_ids: Iterable[str]) -> Key | CompositeKey:
    ids = frozenset(attribute_ids)
    if len(ids) == 1:
        return Key(next(iter(ids)))
    return CompositeKey(ids)


def key_sort_key(dep: Key | CompositeKey) -> tuple:
    """Order keys smallest first, then by attribute ordinals."""
    ords = sorted(split_attribute_id(a)[1] for a in dep.attributes)
    return (len(ords), ords)


@dataclass
class TableDependencies:
    """Dependencies discovered for one table."""

    table_id: str
    keys: list = field(default_factory=list)
    inclusions: list = field(default_factory=list)

    @property
    def all(self) -> list:
        return [*self.keys, *self.inclusions]
