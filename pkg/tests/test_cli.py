import json
import subprocess
import sys

import pytest

from tabledep import fixtures, synth
from tabledep.cli import main
from tabledep.store import TripleStore

FIG7_BODY = {"table_caption": "Torque values", "projection": ["Max"],
             "conditions": [{"attribute_name": "Dia. Code", "value": "06"}, {"value": "C1"}]}


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    labels, registry = synth.write_labeled_corpus(root / "train", 130, seed=1)
    fixtures.write_demo_corpus(root / "corpus")
    assert main(["train", "--labels", str(labels), "--corpus", str(root / "train"),
                 "--registry", str(registry), "--out", str(root / "model.json")]) == 0
    return root


@pytest.fixture(scope="session")
def store_file(workspace):
    out = workspace / "store.tsv"
    assert main(["ingest", "--corpus", str(workspace / "corpus"), "--model",
                 str(workspace / "model.json"), "--out", str(out)]) == 0
    return out


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_ingest_report(workspace, capsys, tmp_path):
    code, out, _ = run(capsys, "ingest", "--corpus", str(workspace / "corpus"),
                       "--model", str(workspace / "model.json"), "--out", str(tmp_path / "s.tsv"))
    assert code == 0
    report = json.loads(out)
    families = {t["table_id"]: t["family"] for t in report["tables"]}
    assert families == {"torque-spec-table1": "matrix-4-by-2-by-3",
                        "combination-spec-table1": "matrix-5-by-5-by-1"}
    torque = next(t for t in report["tables"] if t["table_id"] == "torque-spec-table1")
    assert torque["arity"] == 9 and torque["rows"] == 30 and torque["keys"] >= 1
    assert report["stats"]["triples"] == len(TripleStore.load(tmp_path / "s.tsv"))


def test_ingest_is_byte_deterministic(workspace, store_file, tmp_path):
    again = tmp_path / "again.tsv"
    assert main(["ingest", "--corpus", str(workspace / "corpus"), "--model",
                 str(workspace / "model.json"), "--out", str(again)]) == 0
    assert again.read_bytes() == store_file.read_bytes()


def test_ingest_empty_corpus(tmp_path, capsys, caplog):
    (tmp_path / "empty").mkdir()
    code, out, _ = run(capsys, "ingest", "--corpus", str(tmp_path / "empty"), "--out",
                       str(tmp_path / "s.tsv"))
    assert code == 0 and "no documents" in caplog.text
    assert json.loads(out)["stats"]["triples"] == 0


def test_ingest_unreadable_file(tmp_path, capsys):
    (tmp_path / "c").mkdir()
    (tmp_path / "c" / "broken.json").write_text("{not json")
    code, _, err = run(capsys, "ingest", "--corpus", str(tmp_path / "c"), "--out", str(tmp_path / "s"))
    assert code == 2 and "broken.json" in err


def test_query_fig7(store_file, capsys):
    code, out, _ = run(capsys, "query", "--store", str(store_file), "--query", json.dumps(FIG7_BODY))
    assert code == 0
    top = json.loads(out)["answers"][0]
    assert top["row_id"] == "torque-spec-table1-row1" and top["projected"] == {"Max": "1,7"}


def test_query_multi(store_file, capsys):
    body = {"targets": ["min", "nom", "max"],
            "conditions": [{"value": "ITF14"}, {"value": "ETF2"}, {"value": "08"}]}
    code, out, _ = run(capsys, "query", "--store", str(store_file), "--multi", "--query", json.dumps(body))
    top = json.loads(out)["answers"][0]
    assert code == 0 and top["completeness"] == "full"
    assert top["projected"] == {"min": "2,6", "nom": "2,9", "max": "3,2"}


def test_query_no_match_is_success(store_file, capsys):
    code, out, _ = run(capsys, "query", "--store", str(store_file), "--query",
                       '{"conditions": [{"value": "ZZZZ-nonexistent"}]}')
    assert code == 0 and json.loads(out)["answers"] == []


def test_query_does_not_touch_store(store_file, capsys):
    before = store_file.read_bytes()
    run(capsys, "query", "--store", str(store_file), "--query", json.dumps(FIG7_BODY))
    assert store_file.read_bytes() == before


@pytest.mark.parametrize("text, fragment", [
    ('{"conditions": []}', "condition"),
    ('{"conditions": [', "char 16"),
])
def test_query_usage_errors(store_file, capsys, text, fragment):
    code, _, err = run(capsys, "query", "--store", str(store_file), "--query", text)
    assert code == 1 and fragment in err


def test_query_missing_store(tmp_path, capsys):
    code, _, _ = run(capsys, "query", "--store", str(tmp_path / "nope.tsv"), "--query", "{}")
    assert code != 0


def test_query_corrupt_store(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\n")
    code, _, _ = run(capsys, "query", "--store", str(bad), "--query", json.dumps(FIG7_BODY))
    assert code == 2


def test_bad_arguments_exit_one(capsys):
    with pytest.raises(SystemExit) as err:
        main(["query"])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 1


def test_train_single_family_is_data_error(workspace, tmp_path, capsys):
    labels = [{"document": "synth1.json", "table_index": i, "family": "only"} for i in range(4)]
    path = tmp_path / "labels.json"
    path.write_text(json.dumps(labels))
    code, _, err = run(capsys, "train", "--labels", str(path), "--corpus", str(workspace / "train"),
                       "--out", str(tmp_path / "m.json"))
    assert code == 2 and "famil" in err


def test_classify(workspace, capsys):
    code, out, _ = run(capsys, "classify", "--corpus", str(workspace / "corpus"),
                       "--model", str(workspace / "model.json"))
    assert code == 0
    assert {r["family"] for r in json.loads(out)} == {"matrix-4-by-2-by-3", "matrix-5-by-5-by-1"}


def test_expand_csv(workspace, capsys, tmp_path):
    registry = tmp_path / "reg.json"
    from tabledep.families import save_registry
    save_registry(fixtures.registry(), registry)
    code, out, _ = run(capsys, "expand", "--corpus", str(workspace / "corpus"), "--registry",
                       str(registry), "--family", "matrix-4-by-2-by-3", "--out-dir", str(tmp_path / "csv"))
    assert code == 2  # the combination table does not tile with this family's pivot
    code, out, _ = run(capsys, "expand", "--corpus", str(workspace / "corpus"),
                       "--model", str(workspace / "model.json"))
    assert code == 0 and "# torque-spec-table1\nDia. Code,Size" in out


def test_deps(workspace, capsys):
    code, out, _ = run(capsys, "deps", "--corpus", str(workspace / "corpus"),
                       "--model", str(workspace / "model.json"))
    assert code == 0
    by_table = {d["table_id"]: d for d in json.loads(out)}
    assert ["torque-spec-table1-column1", "torque-spec-table1-column5"] in \
        by_table["torque-spec-table1"]["keys"]


def test_module_entry_point(store_file):
    proc = subprocess.run([sys.executable, "-m", "tabledep", "query", "--store", str(store_file)],
                          input=json.dumps(FIG7_BODY), capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["answers"][0]["projected"] == {"Max": "1,7"}
