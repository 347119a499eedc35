"""Flattening compact tables with a sliding pivot window."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .families import FamilyParams
from .model import CompactTable, FlatTable, make_attributes


class ExpansionError(ValueError):
    pass


@dataclass(frozen=True)
class ExpansionPlan:
    params: FamilyParams
    n_rows: int
    n_cols: int

    @property
    def data_start_row(self) -> int:
        return self.params.h_rows

    @property
    def data_start_col(self) -> int:
        return self.params.v_cols

    @property
    def positions(self) -> int:
        return (self.n_cols - self.params.v_cols) // self.params.pivot_width

    @classmethod
    def build(cls, table: CompactTable, params: FamilyParams) -> "ExpansionPlan":
        h, v, pw = params.h_rows, params.v_cols, params.pivot_width
        if h >= table.n_rows:
            raise ExpansionError(
                f"{table.table_id}: {h} header rows leave no data in a {table.n_rows}-row table")
        if v >= table.n_cols:
            raise ExpansionError(
                f"{table.table_id}: {v} vertical columns leave no plain area in a {table.n_cols}-column table")
        plain = table.n_cols - v
        if plain % pw:
            raise ExpansionError(
                f"{table.table_id}: plain area width {plain} is not a multiple of pivot width {pw}")
        return cls(params, table.n_rows, table.n_cols)


def _orient(grid: tuple[tuple[str, ...], ...], params: FamilyParams) -> list[list[str]]:
    """Move bottom header rows to the top and right-side axis columns to the
    left, keeping the order inside each band, so expansion only handles the
    top/left case."""
    rows = [list(r) for r in grid]
    h, v = params.h_rows, params.v_cols
    if params.horizontal_side == "bottom" and h:
        rows = rows[-h:] + rows[:-h]
    if params.vertical_side == "right" and v:
        rows = [r[-v:] + r[:-v] for r in rows]
    return rows


def expand(table: CompactTable, params: FamilyParams) -> FlatTable:
    """Emit one tuple per (data row, pivot position).

    Each tuple is the row's vertical-axis cells, then the header cells above
    the pivot window's first column, then the pivot window's cells.
    """
    plan = ExpansionPlan.build(table, params)
    grid = _orient(table.grid, params)
    h, v, pw = params.h_rows, params.v_cols, params.pivot_width

    tuples = []
    for r in range(h, plan.n_rows):
        row = grid[r]
        left = row[:v]
        for p in range(plan.positions):
            start = v + p * pw
            top = [grid[k][start] for k in range(h)]
            tuples.append((*left, *top, *row[start:start + pw]))

    last = grid[h - 1] if h else None
    labels: list[str | None] = []
    parents: list[str | None] = []
    for c in range(v):
        labels.append(last[c] if last else None)
        parents.append(None)
    for k in range(h):
        labels.append(f"header-row-{k}")
        parents.append(None)
    for c in range(v, v + pw):
        labels.append(last[c] if last else None)
        upper = [grid[k][c] for k in range(h - 1) if grid[k][c]]
        parents.append(" ".join(upper) or None)

    return FlatTable(
        table_id=table.table_id,
        document_id=table.document_id,
        attributes=make_attributes(table.table_id, labels, parents),
        rows=tuple(tuples),
        caption=table.caption,
        label=table.label,
        page_begin=table.page_begin,
        page_end=table.page_end,
        source_id=table.source_id,
        family=params.family_name,
    )


def to_csv(table: FlatTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([a.label or a.attribute_id for a in table.attributes])
    writer.writerows(table.rows)
    return buf.getvalue()
