"""Hand-built fastener tables used by the tests, scripts and demo corpus.

``torque_raw`` is a torque tolerance matrix: diameter code and size down
the left, combination codes C1..C5 across the top, each code owning a
Min/Nom/Max band. Its first expanded tuples are::

    06 | 3,5 | Torque values | STEEL ... | C1 | Min | 1,3 | 1,5 | 1,7

``combination_raw`` maps nut (internal thread) and bolt (external thread)
fastener ids to the combination code used by the torque table.
"""
from __future__ import annotations

import json
from pathlib import Path

from .families import FamilyParams
from .ingest import Cell, RawTable, raw_to_json, resolve_spans
from .model import CompactTable

TORQUE_DOC = "torque-spec"
COMBINATION_DOC = "combination-spec"

TORQUE_PARAMS = FamilyParams("matrix-4-by-2-by-3", h_rows=4, v_cols=2, pivot_width=3)
COMBINATION_PARAMS = FamilyParams("matrix-5-by-5-by-1", h_rows=5, v_cols=5, pivot_width=1)

CODES = ("C1", "C2", "C3", "C4", "C5")

NA = ("n/a", "n/a", "n/a")

# dia code, size, then (min, nom, max) for C1..C5
TORQUE_ROWS = [
    ("06", "3,5", [("1,3", "1,5", "1,7"), NA, NA, NA, ("1,3", "1,5", "1,7")]),
    ("08", "4,16", [("2,2", "2,5", "2,8"), ("2,6", "2,9", "3,2"), ("2,2", "2,5", "2,8"),
                    ("3,0", "3,3", "3,6"), ("2,6", "2,9", "3,2")]),
    ("10", "5,25", [("4,1", "4,5", "4,9"), ("4,6", "5,0", "5,4"), ("4,1", "4,5", "4,9"),
                    ("5,1", "5,5", "5,9"), ("4,6", "5,0", "5,4")]),
    ("12", "6,8", [("7,0", "7,6", "8,2"), ("7,6", "8,2", "8,8"), ("7,0", "7,6", "8,2"),
                   ("8,2", "8,8", "9,4"), ("7,6", "8,2", "8,8")]),
    ("14", "7,54", [("11,2", "12,0", "12,8"), ("12,0", "12,8", "13,6"), ("11,2", "12,0", "12,8"),
                    ("12,8", "13,6", "14,4"), ("12,0", "12,8", "13,6")]),
    ("16", "8,12", [("17,5", "18,5", "19,5"), NA, NA, NA, ("17,5", "18,5", "19,5")]),
]

TORQUE_TITLE = "Torque values"
TORQUE_MATERIAL = "STEEL bolts property class 8.8"


def torque_raw(table_id: str | None = None) -> RawTable:
    n_cols = 2 + 3 * len(CODES)
    cells = [
        Cell(0, 0, 1, n_cols, TORQUE_TITLE),
        Cell(1, 2, 1, n_cols - 2, TORQUE_MATERIAL),
        Cell(3, 0, 1, 1, "Dia. Code"),
        Cell(3, 1, 1, 1, "Size"),
    ]
    for k, code in enumerate(CODES):
        c = 2 + 3 * k
        cells.append(Cell(2, c, 1, 3, code))
        for j, name in enumerate(("Min", "Nom", "Max")):
            cells.append(Cell(3, c + j, 1, 1, name))
    for i, (dia, size, groups) in enumerate(TORQUE_ROWS):
        r = 4 + i
        cells.append(Cell(r, 0, 1, 1, dia))
        cells.append(Cell(r, 1, 1, 1, size))
        for k, triple in enumerate(groups):
            for j, v in enumerate(triple):
                cells.append(Cell(r, 2 + 3 * k + j, 1, 1, v))
    tid = table_id or f"{TORQUE_DOC}-table1"
    return RawTable(tid, TORQUE_DOC, 4 + len(TORQUE_ROWS), n_cols, tuple(cells),
                    caption="Torque values for steel fasteners", label="Table 3",
                    page_begin=12, page_end=12)


def torque_table() -> CompactTable:
    return resolve_spans(torque_raw())


BOLTS = [  # id, thread, finish
    ("ETF1", "M5x0.8", "Zn"),
    ("ETF2", "M6x1", "Zn"),
    ("ETF3", "M10x1.5", "Ni"),
    ("ETF4", "M12x1.75", "Ni"),
]
NUTS = [  # id, thread, material, class, finish, codes per bolt
    ("ITF12", "M5", "Steel", "K6", "Zn", ["C1", "C3", "C5", "C4"]),
    ("ITF14", "M6", "Steel", "K8", "Zn", ["C3", "C2", "C1", "C5"]),
    ("ITF16", "M10", "Brass", "K6", "Ni", ["C4", "C5", "C2", "C1"]),
    ("ITF18", "M12", "Brass", "K10", "Ni", ["C2", "C4", "C3", "C3"]),
    ("ITF20", "M14", "Steel", "K10", "Cr", ["C5", "C1", "C4", "C2"]),
]


def combination_code(nut: str, bolt: str) -> str:
    bolt_idx = [b[0] for b in BOLTS].index(bolt)
    for n in NUTS:
        if n[0] == nut:
            return n[5][bolt_idx]
    raise KeyError(nut)


def combination_raw(table_id: str | None = None) -> RawTable:
    v = 5
    n_cols = v + len(BOLTS)
    cells = [
        Cell(0, 0, 1, n_cols, "Combination codes"),
        Cell(1, v, 1, len(BOLTS), "Bolt ID"),
    ]
    for j, (bid, thread, finish) in enumerate(BOLTS):
        cells.append(Cell(2, v + j, 1, 1, bid))
        cells.append(Cell(3, v + j, 1, 1, thread))
        cells.append(Cell(4, v + j, 1, 1, finish))
    for c, name in enumerate(("Nut ID", "Thread", "Material", "Class", "Finish")):
        cells.append(Cell(4, c, 1, 1, name))
    for i, (nid, thread, material, klass, finish, codes) in enumerate(NUTS):
        r = 5 + i
        for c, v_ in enumerate((nid, thread, material, klass, finish)):
            cells.append(Cell(r, c, 1, 1, v_))
        for j, code in enumerate(codes):
            cells.append(Cell(r, v + j, 1, 1, code))
    tid = table_id or f"{COMBINATION_DOC}-table1"
    return RawTable(tid, COMBINATION_DOC, 5 + len(NUTS), n_cols, tuple(cells),
                    caption="Combination codes for nut and bolt pairs", label="Table 1",
                    page_begin=4, page_end=5)


def combination_table() -> CompactTable:
    return resolve_spans(combination_raw())


def registry() -> dict[str, FamilyParams]:
    return {p.family_name: p for p in (TORQUE_PARAMS, COMBINATION_PARAMS)}


def document_json(document_id: str, raws: list[RawTable]) -> dict:
    return {"document_id": document_id, "tables": [raw_to_json(r) for r in raws]}


def write_demo_corpus(directory: Path, include_combination: bool = True) -> list[Path]:
    """Write the torque (and optionally combination) documents as corpus JSON."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    docs = [(TORQUE_DOC, [torque_raw()])]
    if include_combination:
        docs.append((COMBINATION_DOC, [combination_raw()]))
    paths = []
    for doc_id, raws in docs:
        p = directory / f"{doc_id}.json"
        p.write_text(json.dumps(document_json(doc_id, raws), indent=1) + "\n")
        paths.append(p)
    return paths
