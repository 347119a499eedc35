"""In-memory triple store under the universal table schema, with text search.

Every document, table, attribute, row and dependency becomes a node. Row
cells are stored with the attribute node itself as predicate::

    doc1-table1-row1  doc1-table1-column2  "3,5"

The store is built once, frozen, and then only read.
"""
from __future__ import annotations

import json
import threading
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, Union

from .model import (
    AttributePair,
    CompositeKey,
    DocumentRef,
    FlatTable,
    InclusionDependency,
    Key,
    ModelError,
    key_sort_key,
    make_attributes,
    row_id_for,
    split_attribute_id,
    split_row_id,
)
from .textindex import FUZZY_THRESHOLD, TextIndex

RDF_TYPE = "rdf:type"
RDFS_LABEL = "rdfs:label"
HAS_TABLE = "hasTable"
HAS_ATTRIBUTE = "hasAttribute"
HAS_ROW = "hasRow"
HAS_DEPENDENCY = "hasDependency"
HAS_CAPTION = "hasCaption"
HAS_ID = "hasID"
PAGE_BEGIN = "pageNumBegin"
PAGE_END = "pageNumEnd"
HAS_PARENT_LABEL = "hasParentLabel"
HAS_COMPONENT = "hasComponent"
HAS_ATTRIBUTE_PAIR = "hasAttributePair"
FIRST_COMPONENT = "firstComponent"
SECOND_COMPONENT = "secondComponent"
HAS_FAMILY = "hasFamily"

VOCABULARY = frozenset({
    RDF_TYPE, RDFS_LABEL, HAS_TABLE, HAS_ATTRIBUTE, HAS_ROW, HAS_DEPENDENCY, HAS_CAPTION,
    HAS_ID, PAGE_BEGIN, PAGE_END, HAS_PARENT_LABEL, HAS_COMPONENT, HAS_ATTRIBUTE_PAIR,
    FIRST_COMPONENT, SECOND_COMPONENT, HAS_FAMILY,
})

DOCUMENT = "Document"
TABLE = "Table"
ATTRIBUTE = "Attribute"
ROW = "Row"
DEPENDENCY = "Dependency"
KEY = "Key"
COMPOSITE_KEY = "CompositeKey"
INCLUSION_DEPENDENCY = "InclusionDependency"
ATTRIBUTE_PAIR = "AttributePair"

CLASSES = frozenset({DOCUMENT, TABLE, ATTRIBUTE, ROW, DEPENDENCY, KEY, COMPOSITE_KEY,
                     INCLUSION_DEPENDENCY, ATTRIBUTE_PAIR})
SUBCLASS_OF = {KEY: DEPENDENCY, COMPOSITE_KEY: KEY, INCLUSION_DEPENDENCY: DEPENDENCY}


def subclasses(cls: str) -> set[str]:
    """``cls`` and every class below it."""
    out = {cls}
    changed = True
    while changed:
        changed = False
        for sub, sup in SUBCLASS_OF.items():
            if sup in out and sub not in out:
                out.add(sub)
                changed = True
    return out


class StoreError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Literal:
    value: Union[str, int]

    def __str__(self):
        return str(self.value)


Node = str
Object = Union[Node, Literal]


class Triple(NamedTuple):
    subject: Node
    predicate: Node
    object: Object

    def sort_key(self) -> tuple:
        o = self.object
        if isinstance(o, Literal):
            return (self.subject, self.predicate, 1, type(o.value).__name__, str(o.value))
        return (self.subject, self.predicate, 0, "", o)


# ---------------------------------------------------------- serialization

def format_triple(t: Triple) -> str:
    for part in (t.subject, t.predicate):
        if "\t" in part or "\n" in part:
            raise StoreError(f"node id contains a tab or newline: {part!r}")
    o = t.object
    if isinstance(o, Literal):
        if isinstance(o.value, int):
            obj = f"int({o.value})"
        else:
            obj = f"str({json.dumps(o.value, ensure_ascii=False)})"
    else:
        obj = f"node({o})"
    return f"{t.subject}\t{t.predicate}\t{obj}"


def parse_triple(line: str, lineno: int = 0) -> Triple:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise StoreError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
    s, p, obj = parts
    kind, _, rest = obj.partition("(")
    if not rest.endswith(")"):
        raise StoreError(f"line {lineno}: malformed object {obj!r}")
    body = rest[:-1]
    if kind == "node":
        o: Object = body
    elif kind == "str":
        try:
            value = json.loads(body)
        except json.JSONDecodeError as exc:
            raise StoreError(f"line {lineno}: bad string literal: {exc.msg}") from exc
        if not isinstance(value, str):
            raise StoreError(f"line {lineno}: bad string literal")
        o = Literal(value)
    elif kind == "int":
        try:
            o = Literal(int(body))
        except ValueError as exc:
            raise StoreError(f"line {lineno}: bad integer literal {body!r}") from exc
    else:
        raise StoreError(f"line {lineno}: unknown object kind {kind!r}")
    return Triple(s, p, o)


# ------------------------------------------------------------ triples out

def _dep_components(dep) -> Iterable[str]:
    if isinstance(dep, (Key, CompositeKey)):
        return dep.attributes
    return [p.first for p in dep.pairs]


def _ordered_deps(deps: Iterable) -> list:
    deps = list(deps)
    keys = sorted((d for d in deps if isinstance(d, (Key, CompositeKey))), key=key_sort_key)
    rest = sorted((d for d in deps if not isinstance(d, (Key, CompositeKey))),
                  key=lambda d: [(p.first, p.second) for p in getattr(d, "pairs", ())])
    return keys + rest


def to_triples(doc: DocumentRef, table: FlatTable, deps: Iterable = ()) -> list[Triple]:
    """All triples describing one flat table and its dependencies."""
    if doc.document_id != table.document_id:
        raise StoreError(f"{table.table_id} belongs to {table.document_id}, not {doc.document_id}")
    tid = table.table_id
    attr_ids = {a.attribute_id for a in table.attributes}
    out = [
        Triple(doc.document_id, RDF_TYPE, DOCUMENT),
        Triple(doc.document_id, HAS_TABLE, tid),
        Triple(tid, RDF_TYPE, TABLE),
    ]
    if table.caption is not None:
        out.append(Triple(tid, HAS_CAPTION, Literal(table.caption)))
    if table.source_id is not None:
        out.append(Triple(tid, HAS_ID, Literal(table.source_id)))
    if table.page_begin is not None:
        out.append(Triple(tid, PAGE_BEGIN, Literal(table.page_begin)))
    if table.page_end is not None:
        out.append(Triple(tid, PAGE_END, Literal(table.page_end)))
    if table.label is not None:
        out.append(Triple(tid, RDFS_LABEL, Literal(table.label)))
    if table.family is not None:
        out.append(Triple(tid, HAS_FAMILY, Literal(table.family)))
    for a in table.attributes:
        out.append(Triple(tid, HAS_ATTRIBUTE, a.attribute_id))
        out.append(Triple(a.attribute_id, RDF_TYPE, ATTRIBUTE))
        if a.label is not None:
            out.append(Triple(a.attribute_id, RDFS_LABEL, Literal(a.label)))
        if a.parent_label is not None:
            out.append(Triple(a.attribute_id, HAS_PARENT_LABEL, Literal(a.parent_label)))
    for i, row in enumerate(table.rows):
        rid = row_id_for(tid, i + 1)
        out.append(Triple(tid, HAS_ROW, rid))
        out.append(Triple(rid, RDF_TYPE, ROW))
        for a, value in zip(table.attributes, row):
            out.append(Triple(rid, a.attribute_id, Literal(value)))

    n_key = n_ind = 0
    for dep in _ordered_deps(deps):
        for a in _dep_components(dep):
            if a not in attr_ids:
                raise StoreError(f"dependency references {a}, which is not an attribute of {tid}")
        if isinstance(dep, (Key, CompositeKey)):
            n_key += 1
            node = f"{tid}-key{n_key}"
            out.append(Triple(tid, HAS_DEPENDENCY, node))
            out.append(Triple(node, RDF_TYPE, KEY if isinstance(dep, Key) else COMPOSITE_KEY))
            for a in sorted(dep.attributes, key=lambda x: split_attribute_id(x)[1]):
                out.append(Triple(node, HAS_COMPONENT, a))
        elif isinstance(dep, InclusionDependency):
            n_ind += 1
            node = f"{tid}-ind{n_ind}"
            out.append(Triple(tid, HAS_DEPENDENCY, node))
            out.append(Triple(node, RDF_TYPE, INCLUSION_DEPENDENCY))
            for m, pair in enumerate(dep.pairs, 1):
                pnode = f"{node}-pair{m}"
                out.append(Triple(node, HAS_ATTRIBUTE_PAIR, pnode))
                out.append(Triple(pnode, RDF_TYPE, ATTRIBUTE_PAIR))
                out.append(Triple(pnode, FIRST_COMPONENT, pair.first))
                out.append(Triple(pnode, SECOND_COMPONENT, pair.second))
        else:
            raise StoreError(f"unknown dependency type {type(dep).__name__}")
    return out


# ------------------------------------------------------------------ store

class TripleStore:
    def __init__(self, triples: Iterable[Triple] = (), threshold: float = FUZZY_THRESHOLD):
        self._spo: dict = defaultdict(lambda: defaultdict(set))
        self._pos: dict = defaultdict(lambda: defaultdict(set))
        self._osp: dict = defaultdict(lambda: defaultdict(set))
        self._triples: set[Triple] = set()
        self._lock = threading.Lock()
        self._frozen = False
        self.threshold = threshold
        self.index = TextIndex(threshold)
        self._cache: dict = {}
        self.add_all(triples)

    # -- writing

    def add(self, t: Triple) -> None:
        with self._lock:
            if self._frozen:
                raise StoreError("store is frozen")
            self._add(t)

    def _add(self, t: Triple) -> None:
        if not isinstance(t, Triple):
            t = Triple(*t)
        if t in self._triples:
            return
        self._triples.add(t)
        self._spo[t.subject][t.predicate].add(t.object)
        self._pos[t.predicate][t.object].add(t.subject)
        self._osp[t.object][t.subject].add(t.predicate)

    def add_all(self, triples: Iterable[Triple]) -> None:
        with self._lock:
            if self._frozen:
                raise StoreError("store is frozen")
            for t in triples:
                self._add(t)

    def freeze(self) -> "TripleStore":
        """Validate, build the text index, and refuse further writes."""
        with self._lock:
            if self._frozen:
                return self
            self._validate()
            index = TextIndex(self.threshold)
            for t in sorted(self._triples, key=Triple.sort_key):
                if isinstance(t.object, Literal):
                    index.add(t, str(t.object.value))
            self.index = index
            self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def _validate(self) -> None:
        attributes = self._pos[RDF_TYPE].get(ATTRIBUTE, set())
        typed = set(self._spo)
        for t in self._triples:
            if t.predicate not in VOCABULARY and t.predicate not in attributes:
                raise StoreError(f"unknown predicate {t.predicate!r} in {t}")
            if t.subject not in typed or RDF_TYPE not in self._spo[t.subject]:
                raise StoreError(f"subject {t.subject!r} has no rdf:type")
        for rid in self._pos[RDF_TYPE].get(ROW, ()):
            if len(self._incoming(rid, HAS_ROW)) != 1:
                raise StoreError(f"row {rid} must have exactly one incoming hasRow")
        for aid in attributes:
            if len(self._incoming(aid, HAS_ATTRIBUTE)) != 1:
                raise StoreError(f"attribute {aid} must have exactly one incoming hasAttribute")

    def _incoming(self, obj: Object, predicate: str) -> list[Node]:
        return [s for s, preds in self._osp.get(obj, {}).items() if predicate in preds]

    # -- reading

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self):
        return iter(sorted(self._triples, key=Triple.sort_key))

    def __contains__(self, t) -> bool:
        return t in self._triples

    def match(self, subject: Node | None = None, predicate: Node | None = None,
              obj: Object | None = None) -> list[Triple]:
        """Triples matching a pattern; None positions are wildcards.

        An rdf:type pattern with a bound class also matches instances of its
        subclasses.
        """
        if predicate == RDF_TYPE and obj is not None and not isinstance(obj, Literal):
            out = []
            for cls in sorted(subclasses(obj)):
                out.extend(self._match(subject, predicate, cls))
            return sorted(set(out), key=Triple.sort_key)
        return sorted(self._match(subject, predicate, obj), key=Triple.sort_key)

    def _match(self, s, p, o) -> Iterable[Triple]:
        if s is not None:
            preds = self._spo.get(s, {})
            if p is not None:
                objs = preds.get(p, ())
                if o is not None:
                    return [Triple(s, p, o)] if o in objs else []
                return [Triple(s, p, x) for x in objs]
            return [Triple(s, pp, x) for pp, objs in preds.items() for x in objs
                    if o is None or x == o]
        if p is not None:
            objs = self._pos.get(p, {})
            if o is not None:
                return [Triple(x, p, o) for x in objs.get(o, ())]
            return [Triple(x, p, oo) for oo, subs in objs.items() for x in subs]
        if o is not None:
            return [Triple(x, pp, o) for x, preds in self._osp.get(o, {}).items() for pp in preds]
        return list(self._triples)

    def match_rows(self, pattern: Sequence) -> list[Triple]:
        s, p, o = pattern
        return self.match(s, p, o)

    def objects(self, subject: Node, predicate: Node) -> list[Object]:
        return sorted(self._spo.get(subject, {}).get(predicate, ()),
                      key=lambda x: (isinstance(x, Literal), str(x)))

    def value(self, subject: Node, predicate: Node):
        objs = self.objects(subject, predicate)
        if not objs:
            return None
        o = objs[0]
        return o.value if isinstance(o, Literal) else o

    def subjects(self, predicate: Node, obj: Object) -> list[Node]:
        return sorted(self._pos.get(predicate, {}).get(obj, ()))

    def instances(self, cls: str) -> list[Node]:
        return sorted({t.subject for t in self.match(None, RDF_TYPE, cls)})

    def is_a(self, node: Node, cls: str) -> bool:
        types = self._spo.get(node, {}).get(RDF_TYPE, set())
        return bool(types & subclasses(cls))

    def search(self, text: str, mode: str = "exact") -> list[tuple[Triple, float]]:
        """Literal triples matching every token of ``text``.

        ``exact`` requires each token verbatim (score 1.0); ``fuzzy`` also
        accepts tokens within the trigram threshold, scored by similarity.
        """
        if mode not in ("exact", "fuzzy"):
            raise StoreError(f"unknown search mode {mode!r}")
        if not self._frozen:
            raise StoreError("search needs a frozen store")
        hits = self.index.lookup(text, fuzzy=(mode == "fuzzy"))
        return sorted(hits.items(), key=lambda kv: (-kv[1], kv[0].sort_key()))

    def stats(self) -> dict:
        return {
            "triples": len(self._triples),
            "documents": len(self.instances(DOCUMENT)),
            "tables": len(self.instances(TABLE)),
            "index_tokens": self.index.token_count,
        }

    # -- schema helpers (cached once frozen)

    def _cached(self, key, fn):
        if not self._frozen:
            return fn()
        try:
            return self._cache[key]
        except KeyError:
            value = self._cache[key] = fn()
            return value

    def tables(self) -> list[Node]:
        return self._cached("tables", lambda: self.instances(TABLE))

    def documents(self) -> list[Node]:
        return self._cached("documents", lambda: self.instances(DOCUMENT))

    def document_of(self, table_id: Node) -> Node | None:
        docs = self.subjects(HAS_TABLE, table_id)
        return docs[0] if docs else None

    def table_of_row(self, row_id: Node) -> Node:
        owners = self.subjects(HAS_ROW, row_id)
        if not owners:
            raise StoreError(f"unknown row {row_id}")
        return owners[0]

    def attributes(self, table_id: Node) -> list[Node]:
        def build():
            attrs = self.objects(table_id, HAS_ATTRIBUTE)
            return sorted(attrs, key=lambda a: split_attribute_id(a)[1])
        return self._cached(("attrs", table_id), build)

    def rows(self, table_id: Node) -> list[Node]:
        def build():
            return sorted(self.objects(table_id, HAS_ROW), key=lambda r: split_row_id(r)[1])
        return self._cached(("rows", table_id), build)

    def cells(self, row_id: Node) -> dict[Node, str]:
        def build():
            tid = self.table_of_row(row_id)
            preds = self._spo.get(row_id, {})
            out = {}
            for a in self.attributes(tid):
                objs = preds.get(a)
                out[a] = next(iter(objs)).value if objs else ""
            return out
        return self._cached(("cells", row_id), build)

    def label(self, node: Node) -> str | None:
        return self.value(node, RDFS_LABEL)

    def parent_label(self, node: Node) -> str | None:
        return self.value(node, HAS_PARENT_LABEL)

    def keys(self, table_id: Node) -> list[Key | CompositeKey]:
        def build():
            out = []
            for d in self.objects(table_id, HAS_DEPENDENCY):
                if self.is_a(d, KEY):
                    comps = [c for c in self.objects(d, HAS_COMPONENT)]
                    out.append(Key(comps[0]) if len(comps) == 1 else CompositeKey(frozenset(comps)))
            return sorted(out, key=key_sort_key)
        return self._cached(("keys", table_id), build)

    def inclusions(self, table_id: Node) -> list[InclusionDependency]:
        def build():
            out = []
            for d in self.objects(table_id, HAS_DEPENDENCY):
                types = self._spo.get(d, {}).get(RDF_TYPE, set())
                if INCLUSION_DEPENDENCY not in types:
                    continue
                pairs = []
                for pnode in self.objects(d, HAS_ATTRIBUTE_PAIR):
                    pairs.append(AttributePair(self.value(pnode, FIRST_COMPONENT),
                                               self.value(pnode, SECOND_COMPONENT)))
                # foreign-key status is derived: the target column is a single-attribute key
                fk = all(self._is_unary_key(p.second) for p in pairs)
                out.append(InclusionDependency(tuple(pairs), fk))
            return sorted(out, key=lambda d: [(p.first, p.second) for p in d.pairs])
        return self._cached(("inds", table_id), build)

    def _is_unary_key(self, attribute_id: Node) -> bool:
        table_id = split_attribute_id(attribute_id)[0]
        return any(isinstance(k, Key) and k.attribute == attribute_id for k in self.keys(table_id))

    def inclusions_from(self, attribute_id: Node) -> list[InclusionDependency]:
        table_id = split_attribute_id(attribute_id)[0]
        return [d for d in self.inclusions(table_id)
                if any(p.first == attribute_id for p in d.pairs)]

    def table_meta(self, table_id: Node) -> dict:
        if not self.is_a(table_id, TABLE):
            raise StoreError(f"unknown table {table_id}")
        return {
            "table_id": table_id,
            "document_id": self.document_of(table_id),
            "caption": self.value(table_id, HAS_CAPTION),
            "label": self.value(table_id, RDFS_LABEL),
            "source_id": self.value(table_id, HAS_ID),
            "page_begin": self.value(table_id, PAGE_BEGIN),
            "page_end": self.value(table_id, PAGE_END),
            "family": self.value(table_id, HAS_FAMILY),
        }

    def reconstruct(self, table_id: Node) -> FlatTable:
        """Rebuild the FlatTable stored under ``table_id``."""
        meta = self.table_meta(table_id)
        attrs = self.attributes(table_id)
        for k, a in enumerate(attrs):
            if split_attribute_id(a)[1] != k:
                raise StoreError(f"{table_id}: attribute ordinals are not contiguous")
        rows = []
        for rid in self.rows(table_id):
            cells = self.cells(rid)
            rows.append(tuple(cells[a] for a in attrs))
        try:
            return FlatTable(
                table_id=table_id,
                document_id=meta["document_id"],
                attributes=make_attributes(table_id, [self.label(a) for a in attrs],
                                           [self.parent_label(a) for a in attrs]),
                rows=tuple(rows),
                caption=meta["caption"],
                label=meta["label"],
                page_begin=meta["page_begin"],
                page_end=meta["page_end"],
                source_id=meta["source_id"],
                family=meta["family"],
            )
        except ModelError as exc:
            raise StoreError(str(exc)) from exc

    # -- persistence

    def dump_lines(self) -> list[str]:
        return sorted(format_triple(t) for t in self._triples)

    def dump(self, path: Path) -> None:
        lines = self.dump_lines()
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "TripleStore":
        store = cls()
        with open(path, encoding="utf-8") as fh:
            store.add_all(parse_triple(line, i) for i, line in enumerate(fh, 1) if line.strip())
        return store.freeze()

    @classmethod
    def loads(cls, text: str) -> "TripleStore":
        store = cls()
        store.add_all(parse_triple(line, i) for i, line in enumerate(text.splitlines(), 1)
                      if line.strip())
        return store.freeze()


def build_store(items: Iterable[tuple[DocumentRef, FlatTable, Iterable]]) -> TripleStore:
    store = TripleStore()
    for doc, table, deps in items:
        store.add_all(to_triples(doc, table, deps))
    return store.freeze()


def add_documents(store: TripleStore, docs: Iterable[DocumentRef]) -> None:
    """Type documents that carry no tables so they still appear in the store."""
    store.add_all(Triple(d.document_id, RDF_TYPE, DOCUMENT) for d in docs)
