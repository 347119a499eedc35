"""End-to-end run over the fastener fixtures.

Writes the torque and combination-code documents plus a generated
training corpus to a work directory, trains the family model, ingests
the fixtures through the CLI and answers a single-table and a join query.

    python3 scripts/fastener_demo.py --work /tmp/fastener
"""
import argparse
import json
import tempfile
from pathlib import Path

from tabledep import fixtures, synth
from tabledep.cli import main as cli


def run(*argv):
    code = cli([str(a) for a in argv])
    if code:
        raise SystemExit(f"tabledep {argv[0]} exited with {code}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", type=Path)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    work = args.work or Path(tempfile.mkdtemp(prefix="fastener-"))

    labels, registry = synth.write_labeled_corpus(work / "train", 130, seed=args.seed)
    fixtures.write_demo_corpus(work / "corpus")
    print(f"# work directory {work}\n# training")
    run("train", "--labels", labels, "--corpus", work / "train", "--registry", registry,
        "--out", work / "model.json")
    print("# ingest")
    run("ingest", "--corpus", work / "corpus", "--model", work / "model.json",
        "--out", work / "store.tsv")

    lookup = {"table_caption": "Torque values", "projection": ["Max"],
              "conditions": [{"attribute_name": "Dia. Code", "value": "06"}, {"value": "C1"}]}
    join = {"targets": ["min", "nom", "max"],
            "conditions": [{"value": "ITF14"}, {"value": "ETF2"}, {"value": "08"}]}
    print("# single-table lookup")
    run("query", "--store", work / "store.tsv", "--limit", 3, "--query", json.dumps(lookup))
    print("# join through the combination code")
    run("query", "--store", work / "store.tsv", "--multi", "--limit", 1, "--query", json.dumps(join))


if __name__ == "__main__":
    main()
