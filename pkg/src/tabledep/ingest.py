"""Reading corpus files into span-free cell grids."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .model import CompactTable, DocumentRef, ModelError, table_id_for

log = logging.getLogger(__name__)


class IngestError(ValueError):
    pass


class ParseError(IngestError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 position: int | None = None, source: str | None = None):
        where = []
        if source:
            where.append(source)
        if line is not None:
            where.append(f"line {line} column {column} (char {position})")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.line = line
        self.column = column
        self.position = position
        self.source = source


class ValidationError(IngestError):
    pass


@dataclass(frozen=True)
class Cell:
    row: int
    col: int
    row_span: int
    col_span: int
    text: str

    def positions(self) -> Iterator[tuple[int, int]]:
        for r in range(self.row, self.row + self.row_span):
            for c in range(self.col, self.col + self.col_span):
                yield r, c


@dataclass(frozen=True)
class RawTable:
    table_id: str
    document_id: str
    n_rows: int
    n_cols: int
    cells: tuple[Cell, ...] = field(default_factory=tuple)
    caption: str | None = None
    label: str | None = None
    page_begin: int | None = None
    page_end: int | None = None
    source_id: str | None = None

    def validate(self) -> None:
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValidationError(f"{self.table_id}: bounds must be positive, got {self.n_rows}x{self.n_cols}")
        for cell in self.cells:
            if cell.row_span < 1 or cell.col_span < 1:
                raise ValidationError(f"{self.table_id}: cell at ({cell.row},{cell.col}) has non-positive span")
            if cell.row < 0 or cell.col < 0:
                raise ValidationError(f"{self.table_id}: cell at ({cell.row},{cell.col}) has negative position")
            if cell.row + cell.row_span > self.n_rows or cell.col + cell.col_span > self.n_cols:
                raise ValidationError(f"{self.table_id}: cell at ({cell.row},{cell.col}) exceeds table bounds")


def _optional_str(obj: dict, key: str) -> str | None:
    value = obj.get(key)
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise ValidationError(f"{key} must be a string")
    return value


def _optional_int(obj: dict, key: str) -> int | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(f"{key} must be an integer")
    return value


def _int(obj: dict, key: str, default: int | None = None) -> int:
    if key not in obj:
        if default is None:
            raise ValidationError(f"missing field {key!r}")
        return default
    value = obj[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(f"{key} must be an integer")
    return value


def _raw_table(document_id: str, index: int, obj: dict) -> RawTable:
    if not isinstance(obj, dict):
        raise ValidationError("table entry must be an object")
    source_id = _optional_str(obj, "table_id")
    cells = []
    for c in obj.get("cells", []):
        text = c.get("text", "")
        if not isinstance(text, str):
            raise ValidationError("cell text must be a string")
        cells.append(Cell(_int(c, "row"), _int(c, "col"), _int(c, "row_span", 1),
                          _int(c, "col_span", 1), text))
    table = RawTable(
        table_id=source_id or table_id_for(document_id, index),
        document_id=document_id,
        n_rows=_int(obj, "n_rows"),
        n_cols=_int(obj, "n_cols"),
        cells=tuple(cells),
        caption=_optional_str(obj, "caption"),
        label=_optional_str(obj, "label"),
        page_begin=_optional_int(obj, "page_begin"),
        page_end=_optional_int(obj, "page_end"),
        source_id=source_id,
    )
    for cell in table.cells:
        if cell.row_span < 1 or cell.col_span < 1:
            raise ValidationError(f"{table.table_id}: cell at ({cell.row},{cell.col}) has non-positive span")
    return table


def parse_document(data: bytes | str, source: str | None = None,
                   strict: bool = True) -> tuple[DocumentRef, list[RawTable]]:
    """Parse one corpus file. Raises ParseError on malformed JSON.

    With ``strict=False`` tables that fail validation are logged and dropped
    instead of raising ValidationError.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8 at byte {exc.start}", source=source) from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno, exc.pos, source) from exc
    if not isinstance(obj, dict):
        raise ParseError("top level must be an object", source=source)
    document_id = obj.get("document_id")
    if not isinstance(document_id, str) or not document_id:
        raise ParseError("missing or empty document_id", source=source)
    tables = obj.get("tables", [])
    if not isinstance(tables, list):
        raise ParseError("tables must be a list", source=source)
    doc = DocumentRef(document_id, obj.get("source_name") or (source or ""))
    raws = []
    for i, t in enumerate(tables):
        try:
            raws.append(_raw_table(document_id, i + 1, t))
        except ValidationError as exc:
            if strict:
                raise
            log.warning("%s: skipping table %d: %s", source or document_id, i + 1, exc)
    return doc, raws


def parse_raw(data: bytes | str, source: str | None = None) -> list[RawTable]:
    return parse_document(data, source)[1]


def resolve_spans(raw: RawTable) -> CompactTable:
    """Copy every spanning cell's text into each position it covers.

    Positions no cell covers become empty strings.
    """
    raw.validate()
    grid = [[""] * raw.n_cols for _ in range(raw.n_rows)]
    owner: dict[tuple[int, int], Cell] = {}
    for cell in raw.cells:
        text = cell.text.strip()
        for pos in cell.positions():
            if pos in owner:
                other = owner[pos]
                raise ValidationError(
                    f"{raw.table_id}: cells at ({other.row},{other.col}) and "
                    f"({cell.row},{cell.col}) overlap at {pos}"
                )
            owner[pos] = cell
            grid[pos[0]][pos[1]] = text
    try:
        return CompactTable(
            table_id=raw.table_id,
            document_id=raw.document_id,
            grid=tuple(tuple(r) for r in grid),
            caption=raw.caption.strip() if raw.caption else None,
            label=raw.label,
            page_begin=raw.page_begin,
            page_end=raw.page_end,
            source_id=raw.source_id,
        )
    except ModelError as exc:
        raise ValidationError(str(exc)) from exc


def grid_to_raw(table_id: str, document_id: str, grid, **meta) -> RawTable:
    """Build a span-free RawTable from a grid (used by fixtures and tests)."""
    cells = tuple(
        Cell(r, c, 1, 1, text) for r, row in enumerate(grid) for c, text in enumerate(row)
    )
    return RawTable(table_id, document_id, len(grid), len(grid[0]), cells, **meta)


def raw_to_json(raw: RawTable) -> dict:
    obj = {"n_rows": raw.n_rows, "n_cols": raw.n_cols}
    if raw.source_id is not None:
        obj["table_id"] = raw.source_id
    for key in ("caption", "label", "page_begin", "page_end"):
        value = getattr(raw, key)
        if value is not None:
            obj[key] = value
    obj["cells"] = [
        {"row": c.row, "col": c.col, "row_span": c.row_span, "col_span": c.col_span, "text": c.text}
        for c in raw.cells
    ]
    return obj


@dataclass
class LoadedDocument:
    document: DocumentRef
    tables: list[CompactTable]
    path: Path | None = None


def load_document(path: Path) -> LoadedDocument:
    """Parse and span-resolve one file; invalid tables are logged and skipped."""
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IngestError(f"{path}: cannot read file: {exc.strerror}") from exc
    doc, raws = parse_document(data, str(path), strict=False)
    tables = []
    for raw in raws:
        try:
            tables.append(resolve_spans(raw))
        except ValidationError as exc:
            log.warning("skipping table %s: %s", raw.table_id, exc)
    return LoadedDocument(doc, tables, path)


def load_corpus(corpus_dir: Path) -> list[LoadedDocument]:
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise IngestError(f"{corpus_dir}: not a directory")
    docs = [load_document(p) for p in sorted(corpus_dir.glob("*.json"))]
    seen: dict[str, Path | None] = {}
    for d in docs:
        if d.document.document_id in seen:
            raise IngestError(f"{d.path}: duplicate document_id {d.document.document_id!r} (also in {seen[d.document.document_id]})")
        seen[d.document.document_id] = d.path
    return docs
