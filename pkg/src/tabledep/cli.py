"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
stderr (level from TABLEDEP_LOG); JSON and CSV output to stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .deps import DEFAULT_MAX_KEY_SIZE, dependencies_to_json, mine_corpus
from .expand import ExpansionError, expand, to_csv
from .families import FamilyError, FamilyModel, kfold_accuracy, load_registry, extract_features
from .ingest import IngestError, load_corpus, load_document
from .pipeline import DEFAULT_POSTERIOR_THRESHOLD, expand_table, ingest_documents
from .query import QueryEngine, QueryError, answer, dumps_result, parse_query
from .store import StoreError, TripleStore

log = logging.getLogger("tabledep")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
              "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=1) + "\n")


def _need(path: Path, what: str, directory: bool = False) -> Path:
    if directory and not path.is_dir():
        raise UsageError(f"{what} {path} is not a directory")
    if not directory and not path.is_file():
        raise UsageError(f"{what} {path} does not exist")
    return path


def _load_model(path: Path | None) -> FamilyModel | None:
    if path is None:
        return None
    _need(path, "model file")
    try:
        return FamilyModel.load(path)
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: cannot load model: {exc}") from exc


def _load_registry(path: Path | None, model: FamilyModel | None) -> dict:
    registry = dict(model.registry) if model else {}
    if path is not None:
        _need(path, "family registry")
        try:
            registry.update(load_registry(path))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: bad family registry: {exc}") from exc
    return registry


def _corpus(path: Path):
    _need(path, "corpus", directory=True)
    docs = load_corpus(path)
    if not docs:
        log.warning("corpus %s contains no documents", path)
    return docs


# ---------------------------------------------------------------- commands

def cmd_ingest(args) -> int:
    model = _load_model(args.model)
    registry = _load_registry(args.registry, model)
    docs = _corpus(args.corpus)
    result = ingest_documents(docs, registry, model, args.threshold, args.max_key_size,
                              args.per_document)
    result.store.dump(args.out)
    log.info("wrote %d triples to %s", len(result.store), args.out)
    _emit({"store": str(args.out), "stats": result.store.stats(),
           "tables": [r.to_json() for r in result.reports]})
    return EXIT_OK


def _labeled_tables(labels_path: Path, corpus: Path):
    _need(labels_path, "labels file")
    try:
        entries = json.loads(labels_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{labels_path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(entries, list):
        raise DataError(f"{labels_path}: expected a list of labeled tables")
    cache = {}
    out = []
    for i, e in enumerate(entries):
        try:
            doc_name, index, family = e["document"], int(e["table_index"]), e["family"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{labels_path}: entry {i} needs document, table_index, family") from exc
        if doc_name not in cache:
            cache[doc_name] = load_document(_need(corpus / doc_name, "document"))
        tables = cache[doc_name].tables
        if not 0 <= index < len(tables):
            raise DataError(f"{labels_path}: entry {i}: {doc_name} has no table {index}")
        out.append((tables[index], family))
    return out


def cmd_train(args) -> int:
    _need(args.corpus, "corpus", directory=True)
    labeled = _labeled_tables(args.labels, args.corpus)
    registry = _load_registry(args.registry, None)
    import numpy as np

    X = np.stack([extract_features(t).as_array() for t, _ in labeled]) if labeled else np.zeros((0, 9))
    y = [f for _, f in labeled]
    try:
        model = FamilyModel.fit(X, y, registry=registry)
        report = kfold_accuracy(X, y, k=args.folds)
    except FamilyError as exc:
        raise DataError(str(exc)) from exc
    model.save(args.out)
    _emit({"model": str(args.out), "examples": len(y), "folds": args.folds, "accuracy": report})
    return EXIT_OK


def cmd_classify(args) -> int:
    model = _load_model(args.model)
    out = []
    for d in _corpus(args.corpus):
        for t in d.tables:
            family, posterior = model.classify(t)
            out.append({"table_id": t.table_id, "family": family, "posterior": round(posterior, 6),
                        "features": list(extract_features(t).as_array())})
    _emit(out)
    return EXIT_OK


def _flat_tables(args):
    model = _load_model(getattr(args, "model", None))
    registry = _load_registry(getattr(args, "registry", None), model)
    forced = getattr(args, "family", None)
    if forced is not None and forced not in registry:
        raise UsageError(f"family {forced!r} is not in the registry")
    flats = []
    for d in _corpus(args.corpus):
        for t in d.tables:
            if forced is not None:
                try:
                    flats.append(expand(t, registry[forced]))
                except ExpansionError as exc:
                    raise DataError(str(exc)) from exc
            else:
                flats.append(expand_table(t, model, registry, args.threshold)[0])
    return flats


def cmd_expand(args) -> int:
    flats = _flat_tables(args)
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        for f in flats:
            (args.out_dir / f"{f.table_id}.csv").write_text(to_csv(f))
        _emit({"written": [f"{f.table_id}.csv" for f in flats]})
    else:
        for f in flats:
            sys.stdout.write(f"# {f.table_id}\n{to_csv(f)}")
    return EXIT_OK


def cmd_deps(args) -> int:
    flats = _flat_tables(args)
    deps = mine_corpus(flats, args.max_key_size, per_document=args.per_document)
    _emit([dependencies_to_json(deps[f.table_id]) for f in flats])
    return EXIT_OK


def _query_text(args) -> str:
    if args.query is not None:
        return args.query
    if args.query_file is not None:
        return _need(args.query_file, "query file").read_text()
    return sys.stdin.read()


def cmd_query(args) -> int:
    _need(args.store, "store file")
    try:
        store = TripleStore.load(args.store)
    except (StoreError, ValueError) as exc:
        raise DataError(f"{args.store}: {exc}") from exc
    try:
        q, _ = parse_query(_query_text(args))
    except QueryError as exc:
        raise UsageError(f"invalid query: {exc}") from exc
    result = answer(QueryEngine(store), q, multi=args.multi, limit=args.limit)
    sys.stdout.write(dumps_result(result) + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import make_server

    _need(args.store, "store file")
    try:
        store = TripleStore.load(args.store)
    except (StoreError, ValueError) as exc:
        raise DataError(f"{args.store}: {exc}") from exc
    server = make_server(store, args.bind, args.port)
    log.warning("serving %s on http://%s:%d", args.store, *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tabledep", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def expansion_opts(sp, model_required=False):
        sp.add_argument("--corpus", type=Path, required=True)
        sp.add_argument("--registry", type=Path)
        sp.add_argument("--model", type=Path, required=model_required)
        sp.add_argument("--threshold", type=float, default=DEFAULT_POSTERIOR_THRESHOLD,
                        help="minimum posterior to trust a family (else plain expansion)")

    sp = sub.add_parser("ingest", help="build a triple store from a corpus directory")
    expansion_opts(sp)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--max-key-size", type=int, default=DEFAULT_MAX_KEY_SIZE)
    sp.add_argument("--per-document", action="store_true",
                    help="only mine inclusion dependencies inside each document")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("train", help="train the family classifier")
    sp.add_argument("--labels", type=Path, required=True)
    sp.add_argument("--corpus", type=Path, required=True)
    sp.add_argument("--registry", type=Path)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--folds", type=int, default=5)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("classify", help="classify corpus tables into families")
    sp.add_argument("--corpus", type=Path, required=True)
    sp.add_argument("--model", type=Path, required=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("expand", help="print expanded tables as CSV")
    expansion_opts(sp)
    sp.add_argument("--family", help="expand every table with this registry family")
    sp.add_argument("--out-dir", type=Path)
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("deps", help="print mined keys and inclusion dependencies")
    expansion_opts(sp)
    sp.add_argument("--family")
    sp.add_argument("--max-key-size", type=int, default=DEFAULT_MAX_KEY_SIZE)
    sp.add_argument("--per-document", action="store_true")
    sp.set_defaults(func=cmd_deps)

    sp = sub.add_parser("query", help="answer a JSON query against a store file")
    sp.add_argument("--store", type=Path, required=True)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--query", help="query JSON text (default: read stdin)")
    src.add_argument("--query-file", type=Path)
    sp.add_argument("--multi", action="store_true", help="multi-table answering, targets as goals")
    sp.add_argument("--limit", type=int)
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("serve", help="serve a store over HTTP")
    sp.add_argument("--store", type=Path, required=True)
    sp.add_argument("--port", type=int, default=8080)
    sp.add_argument("--bind", default="127.0.0.1")
    sp.set_defaults(func=cmd_serve)
    return p


def setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("TABLEDEP_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tabledep {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, IngestError, StoreError, FamilyError, ExpansionError, OSError) as exc:
        print(f"tabledep {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
