import json
from copy import copy

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_store
from tabledep.expand import expand
from tabledep.fixtures import TORQUE_PARAMS, combination_code
from tabledep.model import CompactTable
from tabledep.query import (
    FULL,
    INCOMPLETE,
    Condition,
    DisambiguationError,
    Query,
    QueryEngine,
    QueryError,
    answer,
    parse_query,
    query_multi_table,
    retrieve_values,
)
from tabledep.textindex import match_score

TORQUE = "torque-spec-table1"
COMBO = "combination-spec-table1"


def small_torque():
    """Two combination codes, three dia codes including 3A."""
    title, material = "Torque values", "STEEL bolts property class 8.8"
    grid = [
        [title] * 8,
        ["", ""] + [material] * 6,
        ["", ""] + ["C1"] * 3 + ["C2"] * 3,
        ["Dia. Code", "Size", "Min", "Nom", "Max", "Min", "Nom", "Max"],
        ["3A", "3,5", "1,3", "1,5", "1,7", "1,6", "1,8", "2,0"],
        ["3B", "3,5", "1,4", "1,6", "1,8", "1,9", "2,1", "2,3"],
        ["4A", "4,0", "2,2", "2,5", "2,8", "2,6", "2,9", "3,2"],
    ]
    table = CompactTable("small-table1", "small", grid, caption="Torque values")
    return expand(table, TORQUE_PARAMS)


@pytest.fixture(scope="module")
def small_engine():
    return QueryEngine(make_store(small_torque()))


FIG7 = Query((Condition("3A", "Dia. Code"), Condition("C2")), "Torque values", ("Max",))


def test_fig7_shape_on_small_fixture(small_engine):
    rows = small_engine.query_single_table(FIG7)
    top = rows[0]
    assert top.projected == {"Max": "2,0"}
    assert top.cells["Dia. Code"] == "3A" and "C2" in top.cells.values()
    assert top.score > rows[1].score


def test_table1_row_one(engine):
    q = Query((Condition("06"), Condition("C1")), projection=("Max",))
    top = engine.query_single_table(q)[0]
    assert top.row_id == f"{TORQUE}-row1"
    assert top.projected == {"Max": "1,7"}


def test_nothing_matches(engine):
    assert engine.query_single_table(Query((Condition("ZZZZ-nonexistent"),))) == []


def test_restrict_table(engine):
    rows = engine.query_single_table(Query((Condition("C2"),)), restrict_table=COMBO)
    assert rows and {r.table_id for r in rows} == {COMBO}


def test_unmatched_aspect_never_disqualifies(engine):
    q = Query((Condition("06"),), "no such caption", ("no such column",))
    rows = engine.query_single_table(q)
    assert len(rows) == 5
    assert all(r.sub_scores["caption"] == 0 for r in rows)


def test_score_is_weighted_sum(engine):
    q = Query((Condition("06", "Dia. Code"), Condition("C1")), "Torque values", ("Max",),
              {"caption": 2.0, "projection": 0.5, "condition": 1.0})
    for r in engine.query_single_table(q):
        expected = 2.0 * r.sub_scores["caption"] + 0.5 * r.sub_scores["projection[0]"] + \
            r.sub_scores["condition[0]"] + r.sub_scores["condition[1]"]
        assert r.score == pytest.approx(expected)
        assert 0 <= r.score <= 2.0 + 0.5 + 2
        assert all(0 <= s <= 1 for s in r.sub_scores.values())


def test_fuzzy_beats_unmatched(engine):
    q = Query((Condition("08"),), "Torqe values")
    rows = engine.query_single_table(q, restrict_table=TORQUE)
    assert rows and all(0.5 <= r.sub_scores["caption"] < 1 for r in rows)


def test_deterministic(engine):
    q = Query((Condition("12"), Condition("C3")), "Torque values", ("Nom",))
    first = [r.to_json() for r in engine.query_single_table(q)]
    for _ in range(5):
        assert [r.to_json() for r in QueryEngine(engine.store).query_single_table(q)] == first


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 8))
def test_monotone_when_adding_exact_condition(col):
    engine = QueryEngine(make_store(small_torque()))
    q = Query((Condition("3A"),))
    before = engine.query_single_table(q)
    top = before[0]
    value = list(engine.store.cells(top.row_id).values())[col]
    if not value.strip():
        return
    after = engine.query_single_table(Query(q.conditions + (Condition(value),)))
    b = {r.row_id: r.score for r in before}
    a = {r.row_id: r.score for r in after}
    for r in before:
        lacks = value not in engine.store.cells(r.row_id).values()
        if lacks and r.row_id in a:
            assert a[top.row_id] - a[r.row_id] >= b[top.row_id] - b[r.row_id] - 1e-12


def test_retrieve_values_follows_inclusion(engine):
    got = engine.retrieve_values(TORQUE, f"{TORQUE}-column5", [Condition("ITF14"), Condition("ETF2")])
    assert [v.value for v in got] == [combination_code("ITF14", "ETF2")] == ["C2"]
    assert all(p.startswith(COMBO) for v in got for p in v.provenance)


def test_retrieve_values_without_inclusions(engine):
    assert engine.retrieve_values(TORQUE, f"{TORQUE}-column2", [Condition("ITF14")]) == []


def test_retrieve_values_dedups_across_dependencies():
    from tabledep.model import FlatTable, make_attributes

    def t(tid, rows):
        return FlatTable(tid, tid.split("-")[0], make_attributes(tid, ["code", "k"]), rows)

    target = t("a-table1", [("C1", "x"), ("C2", "y")])
    s1 = t("b-table1", [("C1", "q"), ("C2", "r")])
    s2 = t("c-table1", [("C1", "q"), ("C2", "s")])
    e = QueryEngine(make_store(target, s1, s2))
    (rv,) = e.retrieve_values("a-table1", "a-table1-column1", [Condition("q")])
    assert rv.value == "C1" and len(rv.provenance) == 2


def test_multi_table_join(engine, fastener_store):
    rows = engine.query_multi_table(["min", "nom", "max"], [Condition("ITF14"), Condition("ETF2"),
                                                            Condition("08")])
    top = rows[0]
    assert top.completeness == FULL
    assert top.projected == {"min": "2,6", "nom": "2,9", "max": "3,2"}
    # manual two-step lookup
    code = combination_code("ITF14", "ETF2")
    manual = [r for r in fastener_store.rows(TORQUE)
              if {"08", code} <= set(fastener_store.cells(r).values())]
    assert [top.row_id] == manual
    # join soundness: the provenance row carries the remaining inputs
    prov = set().union(*(fastener_store.cells(p).values() for p in top.provenance))
    assert {"ITF14", "ETF2", code} <= prov
    assert code in fastener_store.cells(top.row_id).values()


def test_multi_table_step_one(engine):
    values = [Condition("06"), Condition("C1")]
    multi = engine.query_multi_table(["max"], values)
    single = engine.query_single_table(Query(tuple(values), None, ("max",)), require_all=True)
    assert [r.to_json() for r in multi] == [r.to_json() for r in single]


def test_multi_table_incomplete_fallback(torque_store):
    values = [Condition("ITF14"), Condition("ETF2"), Condition("08")]
    rows = query_multi_table(torque_store, ["min", "nom", "max"], values)
    assert rows and all(r.completeness == INCOMPLETE for r in rows)
    scan = {r for r in torque_store.rows(TORQUE)
            if any(match_score(c.value, cell) > 0 for c in values
                   for cell in torque_store.cells(r).values())}
    assert {r.row_id for r in rows} == scan


def test_module_level_retrieve(fastener_store):
    got = retrieve_values(fastener_store, TORQUE, f"{TORQUE}-column5", [Condition("ITF14"), Condition("ETF2")])
    assert [v.value for v in got] == ["C2"]


def test_disambiguation_by_combination_code(engine):
    q = Query((Condition("06"),))
    rows = engine.query_single_table(q)
    suggestion = engine.suggest_disambiguation(q, rows)
    cells = [engine.store.cells(r.row_id) for r in rows]
    separating = [a for a in engine.store.attributes(TORQUE)
                  if len({c[a] for c in cells}) == len(cells)]
    assert suggestion == [f"{TORQUE}-column5"]
    assert set(suggestion) <= set(separating)


def test_disambiguation_trivial_and_errors(engine):
    q = Query((Condition("C2"),))
    rows = engine.query_single_table(q)
    assert engine.suggest_disambiguation(q, rows[:1]) == []
    with pytest.raises(DisambiguationError, match="table_caption"):
        engine.suggest_disambiguation(q, rows)
    dup = Query((Condition("n/a"),))
    row = engine.query_single_table(dup, restrict_table=TORQUE)[0]
    with pytest.raises(DisambiguationError, match="not disambiguable"):
        engine.suggest_disambiguation(dup, [row, copy(row)])


def test_answer_suggests_labels(engine):
    result = answer(engine, Query((Condition("06"),)))
    assert result["suggestions"] == ["header-row-2"]
    assert len(result["answers"]) == 5


def test_parse_query_wire_format():
    q, multi = parse_query(json.dumps({"table_caption": "Torque values", "projection": ["Max"],
                                       "conditions": [{"attribute_name": "Dia. Code", "value": "3A"},
                                                      {"value": "C2"}]}))
    assert not multi and q == FIG7
    q, multi = parse_query('{"targets": ["min"], "conditions": [{"value": "08"}]}')
    assert multi and q.projection == ("min",)


@pytest.mark.parametrize("text", ['{"conditions": []}', "{}", '{"conditions": [{"value": ""}]}',
                                  '{"conditions": [{"value": "x"}], "projection": "Max"}', "[1"])
def test_invalid_queries(text):
    with pytest.raises(QueryError):
        parse_query(text)


def test_malformed_json_has_position():
    with pytest.raises(QueryError) as err:
        parse_query('{"conditions": [}')
    assert err.value.position == 16
