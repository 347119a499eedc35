"""Random labeled tables for classifier training and evaluation.

Each generator draws a table of one layout family with random size and a
little cell noise (blanks and "n/a"). Tables are emitted as RawTable with
real spans so that they go through the same span resolution as corpus
files.
"""
from __future__ import annotations

import json
import random
import string
from pathlib import Path
from typing import Callable

from .families import FamilyParams, save_registry
from .ingest import Cell, RawTable, raw_to_json, resolve_spans
from .model import CompactTable

WORDS = ("Torque", "Bolt", "Nut", "Steel", "Brass", "Class", "Finish", "Thread", "Code",
         "Value", "Grade", "Coating", "Length", "Width", "Pitch", "Load", "Limit", "Type")

FAMILY_PARAMS = {
    "plain": None,  # sized per table
    "matrix-4-by-2-by-3": FamilyParams("matrix-4-by-2-by-3", 4, 2, 3),
    "matrix-5-by-5-by-1": FamilyParams("matrix-5-by-5-by-1", 5, 5, 1),
    "nested-2-by-1-by-2": FamilyParams("nested-2-by-1-by-2", 2, 1, 2),
}


def _word(rng: random.Random, n: int = 1) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(n))


def _number(rng: random.Random) -> str:
    whole = rng.randint(0, 99)
    if rng.random() < 0.6:
        return f"{whole},{rng.randint(0, 99)}"
    return str(whole)


def _code(rng: random.Random, prefix: str) -> str:
    return f"{prefix}{rng.randint(1, 99)}"


def _noisy(rng: random.Random, value: str, noise: float) -> str:
    if rng.random() < noise:
        return rng.choice(("", "n/a"))
    return value


def plain(rng: random.Random, noise: float) -> RawTable:
    n_cols = rng.randint(3, 8)
    n_rows = rng.randint(4, 25)
    cells = [Cell(0, c, 1, 1, _word(rng, rng.randint(1, 2))) for c in range(n_cols)]
    kinds = [rng.choice(("num", "num", "code", "word")) for _ in range(n_cols)]
    prefix = [rng.choice(string.ascii_uppercase) for _ in range(n_cols)]
    for r in range(1, n_rows):
        for c, kind in enumerate(kinds):
            if kind == "num":
                v = _number(rng)
            elif kind == "code":
                v = _code(rng, prefix[c])
            else:
                v = rng.choice(WORDS).lower()
            cells.append(Cell(r, c, 1, 1, _noisy(rng, v, noise)))
    return RawTable("synthetic", "synthetic", n_rows, n_cols, tuple(cells))


def torque_like(rng: random.Random, noise: float) -> RawTable:
    groups = rng.randint(2, 6)
    n_rows = 4 + rng.randint(3, 14)
    n_cols = 2 + 3 * groups
    cells = [
        Cell(0, 0, 1, n_cols, _word(rng, 2)),
        Cell(1, 2, 1, n_cols - 2, _word(rng, 3)),
        Cell(3, 0, 1, 1, "Dia. Code"),
        Cell(3, 1, 1, 1, "Size"),
    ]
    for k in range(groups):
        cells.append(Cell(2, 2 + 3 * k, 1, 3, f"C{k + 1}"))
        for j, name in enumerate(("Min", "Nom", "Max")):
            cells.append(Cell(3, 2 + 3 * k + j, 1, 1, name))
    for r in range(4, n_rows):
        cells.append(Cell(r, 0, 1, 1, f"{rng.randint(1, 40):02d}"))
        cells.append(Cell(r, 1, 1, 1, f"{rng.randint(1, 20)},{rng.randint(0, 99)}"))
        for c in range(2, n_cols):
            cells.append(Cell(r, c, 1, 1, _noisy(rng, f"{rng.randint(0, 30)},{rng.randint(0, 9)}", noise)))
    return RawTable("synthetic", "synthetic", n_rows, n_cols, tuple(cells))


def combination_like(rng: random.Random, noise: float) -> RawTable:
    bolts = rng.randint(3, 8)
    v = 5
    n_cols = v + bolts
    n_rows = 5 + rng.randint(3, 12)
    cells = [Cell(0, 0, 1, n_cols, _word(rng, 2)), Cell(1, v, 1, bolts, "Bolt ID")]
    for j in range(bolts):
        cells.append(Cell(2, v + j, 1, 1, _code(rng, "ETF")))
        cells.append(Cell(3, v + j, 1, 1, f"M{rng.randint(3, 20)}x{rng.randint(1, 3)}"))
        cells.append(Cell(4, v + j, 1, 1, rng.choice(("Zn", "Ni", "Cr"))))
    for c, name in enumerate(("Nut ID", "Thread", "Material", "Class", "Finish")):
        cells.append(Cell(4, c, 1, 1, name))
    for r in range(5, n_rows):
        row = [_code(rng, "ITF"), f"M{rng.randint(3, 20)}", rng.choice(("Steel", "Brass")),
               f"K{rng.randint(4, 12)}", rng.choice(("Zn", "Ni", "Cr"))]
        for c, val in enumerate(row):
            cells.append(Cell(r, c, 1, 1, val))
        for j in range(bolts):
            cells.append(Cell(r, v + j, 1, 1, _noisy(rng, f"C{rng.randint(1, 9)}", noise)))
    return RawTable("synthetic", "synthetic", n_rows, n_cols, tuple(cells))


def nested_like(rng: random.Random, noise: float) -> RawTable:
    """Coffee-style: one label column, years spanning Quantity/Value pairs."""
    years = rng.randint(2, 6)
    n_cols = 1 + 2 * years
    n_rows = 2 + rng.randint(3, 20)
    start = rng.randint(1990, 2015)
    cells = [Cell(0, 0, 1, 1, ""), Cell(1, 0, 1, 1, _word(rng))]
    for k in range(years):
        cells.append(Cell(0, 1 + 2 * k, 1, 2, str(start + k)))
        cells.append(Cell(1, 1 + 2 * k, 1, 1, "Quantity"))
        cells.append(Cell(1, 2 + 2 * k, 1, 1, "Value"))
    for r in range(2, n_rows):
        cells.append(Cell(r, 0, 1, 1, _word(rng)))
        for c in range(1, n_cols):
            cells.append(Cell(r, c, 1, 1, _noisy(rng, str(rng.randint(10, 99999)), noise)))
    return RawTable("synthetic", "synthetic", n_rows, n_cols, tuple(cells))


GENERATORS: dict[str, Callable[[random.Random, float], RawTable]] = {
    "plain": plain,
    "matrix-4-by-2-by-3": torque_like,
    "matrix-5-by-5-by-1": combination_like,
    "nested-2-by-1-by-2": nested_like,
}


def generate_corpus(n_tables: int = 130, seed: int = 0, noise: float = 0.05,
                    families: tuple[str, ...] | None = None) -> list[tuple[RawTable, str]]:
    """Labeled raw tables, families assigned round robin then shuffled."""
    rng = random.Random(seed)
    names = families or tuple(GENERATORS)
    out = []
    for i in range(n_tables):
        family = names[i % len(names)]
        raw = GENERATORS[family](rng, noise)
        tid = f"synth{seed}-table{i + 1}"
        out.append((RawTable(tid, f"synth{seed}", raw.n_rows, raw.n_cols, raw.cells), family))
    rng.shuffle(out)
    return out


def generate_tables(n_tables: int = 130, seed: int = 0, noise: float = 0.05,
                    families: tuple[str, ...] | None = None) -> list[tuple[CompactTable, str]]:
    return [(resolve_spans(raw), fam) for raw, fam in generate_corpus(n_tables, seed, noise, families)]


def registry() -> dict[str, FamilyParams]:
    return {name: p for name, p in FAMILY_PARAMS.items() if p is not None}


def write_labeled_corpus(directory: Path, n_tables: int = 130, seed: int = 0,
                         noise: float = 0.05) -> tuple[Path, Path]:
    """Write one corpus document plus a labels file and a family registry.

    Returns (labels_path, registry_path). The labels file is a list of
    {document, table_index, family} entries, the format ``tabledep train``
    reads.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pairs = generate_corpus(n_tables, seed, noise)
    name = f"synth{seed}.json"
    doc = {"document_id": f"synth{seed}", "tables": [raw_to_json(r) for r, _ in pairs]}
    (directory / name).write_text(json.dumps(doc) + "\n")
    labels = [{"document": name, "table_index": i, "family": fam} for i, (_, fam) in enumerate(pairs)]
    labels_path = directory.parent / f"{directory.name}-labels.json"
    labels_path.write_text(json.dumps(labels, indent=1) + "\n")
    registry_path = directory.parent / f"{directory.name}-registry.json"
    save_registry(registry(), registry_path)
    return labels_path, registry_path
