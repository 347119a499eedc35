"""Ingestion and query latency as the corpus grows.

Generated tables are expanded with their true family parameters, mined,
loaded into a store, and queried with values drawn from stored cells.

    python3 scripts/ingest_scaling.py --sizes 50 100 200 400
"""
import argparse
import random
import statistics
import time

from tabledep import synth
from tabledep.deps import mine_corpus
from tabledep.expand import expand
from tabledep.families import FamilyParams
from tabledep.model import DocumentRef
from tabledep.query import Condition, Query, QueryEngine
from tabledep.store import build_store


def flatten(n_tables, seed):
    reg = synth.registry()
    flats = []
    for table, family in synth.generate_tables(n_tables, seed=seed):
        params = reg.get(family) or FamilyParams.plain(table.n_cols)
        flats.append(expand(table, params))
    return flats


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--queries", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'tables':>7} {'triples':>9} {'mine s':>8} {'store s':>8} {'query ms p50':>13} {'p95':>8}")
    for n in args.sizes:
        flats = flatten(n, args.seed)
        t0 = time.perf_counter()
        deps = mine_corpus(flats, per_document=False)
        t1 = time.perf_counter()
        store = build_store((DocumentRef(f.document_id), f, deps[f.table_id].all) for f in flats)
        t2 = time.perf_counter()
        engine = QueryEngine(store)
        rng = random.Random(args.seed)
        lat = []
        for _ in range(args.queries):
            f = rng.choice([f for f in flats if f.rows])
            row = rng.choice(f.rows)
            values = [v for v in row if v.strip()][:2] or ["x"]
            q = Query(tuple(Condition(v) for v in values))
            s = time.perf_counter()
            engine.query_single_table(q)
            lat.append((time.perf_counter() - s) * 1000)
        lat.sort()
        p95 = lat[int(0.95 * (len(lat) - 1))]
        print(f"{n:>7} {len(store):>9} {t1 - t0:>8.2f} {t2 - t1:>8.2f} "
              f"{statistics.median(lat):>13.2f} {p95:>8.2f}")


if __name__ == "__main__":
    main()
