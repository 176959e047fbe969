"""Command-line pipeline: stats, sample, embed, eval, sweep.

Every stage writes files; each file carries a ``# anonfp-... config_hash=...``
header line (or a ``config_hash`` field) naming the run that produced it.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .embed import NEGATIVE_MODES, TrainConfig, train, write_fingerprints_csv, \
    write_fingerprints_jsonl, read_fingerprints_csv
from .evaluate import DEFAULT_C_GRID, DEFAULT_GAMMA_FACTORS, cross_validate
from .graphs import parse_tu_dataset
from .walks import WalkCorpus, build_corpus, read_corpus_lines, write_corpus

logger = logging.getLogger("anonfp")

MAX_R = 12
MAX_T = 10_000


class PipelineError(Exception):
    pass


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def file_digest(paths: Sequence[Path]) -> str:
    h = hashlib.sha256()
    for p in paths:
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()[:16]


@contextmanager
def atomic_path(path):
    """Yield a temporary sibling path, renamed onto ``path`` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def parse_header(line: str) -> dict:
    """``'anonfp-x key=value key=value'`` -> dict (the tag under ``kind``)."""
    parts = line.split()
    out = {"kind": parts[0]} if parts else {}
    for tok in parts[1:]:
        k, _, v = tok.partition("=")
        out[k] = v
    return out


def format_header(kind: str, fields: dict) -> str:
    return " ".join([kind] + [f"{k}={v}" for k, v in fields.items()])


def check_scale(r: int, t: int):
    if not 1 <= r <= MAX_R:
        raise PipelineError(f"r must be in 1..{MAX_R}, got {r}")
    if not 1 <= t <= MAX_T:
        raise PipelineError(f"t must be in 1..{MAX_T}, got {t}")


# -- stages ------------------------------------------------------------------------

def run_stats(dataset, name: str) -> dict:
    return parse_tu_dataset(dataset, name).summary()


def run_sample(dataset, name: str, r: int, t: int, seed: int, out, dedup: bool = False,
               workers: int = 1) -> Path:
    """Sample a corpus; writes ``corpus.txt`` and ``corpus.manifest.json`` under ``out``."""
    check_scale(r, t)
    dataset = Path(dataset)
    gs = parse_tu_dataset(dataset, name)
    files = sorted(dataset.glob(f"{name}_*.txt"))
    cfg = {"stage": "sample", "dataset": name, "data_digest": file_digest(files),
           "r": r, "t": t, "seed": seed, "dedup": dedup}
    h = config_hash(cfg)
    corpus = build_corpus(gs, r, t, seed, dedup=dedup, workers=workers)
    out = Path(out)
    corpus_path = out / "corpus.txt"
    header = format_header("anonfp-corpus", {"config_hash": h, "dataset": name, "r": r, "t": t,
                                             "seed": seed})
    with atomic_path(corpus_path) as tmp:
        write_corpus(corpus, tmp, header)
    manifest = dict(cfg, config_hash=h, vocab_size=corpus.vocab_size,
                    total_walks=corpus.total_walks, n_graphs=corpus.n_graphs,
                    graph_ids=corpus.graph_ids, labels=corpus.labels)
    with atomic_path(out / "corpus.manifest.json") as tmp:
        tmp.write_text(json.dumps(manifest, sort_keys=True) + "\n")
    logger.info("corpus: %d graphs, vocabulary %d, %d walks", corpus.n_graphs,
                corpus.vocab_size, corpus.total_walks)
    return corpus_path


def load_corpus(corpus_path) -> tuple[WalkCorpus, dict]:
    corpus_path = Path(corpus_path)
    if not corpus_path.is_file():
        raise PipelineError(f"missing corpus file: {corpus_path}")
    manifest_path = corpus_path.with_name(corpus_path.stem + ".manifest.json")
    if not manifest_path.is_file():
        raise PipelineError(f"missing corpus manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    ids, per_graph, headers = read_corpus_lines(corpus_path)
    head = parse_header(headers[0]) if headers else {}
    if head.get("config_hash") != manifest["config_hash"]:
        raise PipelineError(f"{corpus_path} does not match its manifest")
    if ids != manifest["graph_ids"]:
        raise PipelineError(f"{corpus_path}: graph ids disagree with manifest")
    corpus = WalkCorpus(ids, per_graph, manifest["r"], manifest["t"], manifest["seed"],
                        labels=manifest["labels"], dedup=manifest.get("dedup", False))
    return corpus, manifest


def run_embed(corpus_path, out, cfg: TrainConfig) -> Path:
    """Train fingerprints; writes ``fingerprints.csv``/``.jsonl``, ``loss.csv`` and ``model.npz``."""
    corpus, manifest = load_corpus(corpus_path)
    stage_cfg = {"stage": "embed", "corpus_hash": manifest["config_hash"], "train": asdict(cfg)}
    h = config_hash(stage_cfg)
    model = train(corpus, cfg)
    out = Path(out)
    fields = {"config_hash": h, "corpus_hash": manifest["config_hash"],
              "dataset": manifest["dataset"], "r": manifest["r"], "t": manifest["t"], "d": cfg.d,
              "deterministic": cfg.deterministic}
    fp_path = out / "fingerprints.csv"
    with atomic_path(fp_path) as tmp:
        write_fingerprints_csv(tmp, corpus.graph_ids, corpus.labels, model.graph_vectors,
                               format_header("anonfp-fingerprints", fields))
    with atomic_path(out / "fingerprints.jsonl") as tmp:
        write_fingerprints_jsonl(tmp, corpus.graph_ids, corpus.labels, model.graph_vectors, fields)
    with atomic_path(out / "loss.csv") as tmp:
        with open(tmp, "w") as fh:
            fh.write(f"# {format_header('anonfp-loss', {'config_hash': h})}\n")
            fh.write("epoch,loss\n")
            for i, loss in enumerate(model.epoch_losses):
                fh.write(f"{i},{loss!r}\n")
    with atomic_path(out / "model.npz") as tmp:
        model.save(tmp)
    return fp_path


def run_eval(fingerprint_path, out, c_grid=DEFAULT_C_GRID, gamma_factors=DEFAULT_GAMMA_FACTORS,
             seed: int = 0, corpus_path=None):
    """Cross-validate fingerprints; writes ``report.csv``, ``roc.csv`` and ``report.json``."""
    fingerprint_path = Path(fingerprint_path)
    if not fingerprint_path.is_file():
        raise PipelineError(f"missing fingerprint file: {fingerprint_path}")
    ids, labels, X, headers = read_fingerprints_csv(fingerprint_path)
    head = parse_header(headers[0]) if headers else {}
    if corpus_path is not None:
        _, manifest = load_corpus(corpus_path)
        if head.get("corpus_hash") != manifest["config_hash"]:
            raise PipelineError(
                f"fingerprints were built from corpus {head.get('corpus_hash')}, "
                f"not {manifest['config_hash']}")
    if len(np.unique(labels)) < 2:
        raise PipelineError("fingerprint file holds a single class")
    d = X.shape[1]
    gamma_grid = [g / d for g in gamma_factors]
    stage_cfg = {"stage": "eval", "fingerprints_hash": head.get("config_hash"),
                 "c_grid": list(c_grid), "gamma_factors": list(gamma_factors), "seed": seed}
    h = config_hash(stage_cfg)
    echo = {"dataset": head.get("dataset", ""), "r": head.get("r", ""), "t": head.get("t", ""),
            "d": d, "config_hash": h, "fingerprints_hash": head.get("config_hash")}
    report = cross_validate(X, labels, c_grid, gamma_grid, seed=seed, config=echo)
    out = Path(out)
    header = format_header("anonfp-report", {"config_hash": h,
                                             "fingerprints_hash": head.get("config_hash")})
    with atomic_path(out / "report.csv") as tmp:
        report.write_csv(tmp, header)
    with atomic_path(out / "roc.csv") as tmp:
        report.write_roc_csv(tmp, header)
    with atomic_path(out / "report.json") as tmp:
        report.write_json(tmp)
    return report


def cell_seed(master_seed: int, r: int, t: int) -> int:
    return int(np.random.SeedSequence([master_seed, r, t]).generate_state(1)[0])


def _run_cell(job: dict) -> dict:
    r, t = job["r"], job["t"]
    seed = cell_seed(job["seed"], r, t)
    cell = Path(job["out"]) / "cells" / f"r{r}_t{t}"
    row = {"r": r, "t": t, "seed": seed, "mean_accuracy": "", "std_accuracy": "",
           "status": "ok", "error": ""}
    try:
        corpus_path = run_sample(job["dataset"], job["name"], r, t, seed, cell, job["dedup"])
        cfg = TrainConfig(**dict(job["train"], seed=seed))
        fp = run_embed(corpus_path, cell, cfg)
        report = run_eval(fp, cell, job["c_grid"], job["gamma_factors"], seed)
        row["mean_accuracy"] = report.mean_accuracy
        row["std_accuracy"] = report.std_accuracy
    except Exception as exc:  # recorded in-row, the sweep goes on
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return row


def run_sweep(dataset, name: str, rs: Sequence[int], ts: Sequence[int], seed: int, out,
              train_cfg: TrainConfig, c_grid=DEFAULT_C_GRID,
              gamma_factors=DEFAULT_GAMMA_FACTORS, dedup: bool = False, workers: int = 1):
    """Full factorial over ``(r, t)``; returns the rows and the best row."""
    for r in rs:
        check_scale(r, 1)
    for t in ts:
        check_scale(1, t)
    base = {k: v for k, v in asdict(train_cfg).items() if k != "seed"}
    jobs = [{"dataset": str(dataset), "name": name, "r": r, "t": t, "seed": seed,
             "out": str(out), "dedup": dedup, "train": base, "c_grid": list(c_grid),
             "gamma_factors": list(gamma_factors)} for r in rs for t in ts]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_run_cell, jobs))
    else:
        rows = [_run_cell(j) for j in jobs]
    ok = [row for row in rows if row["status"] == "ok"]
    best = max(ok, key=lambda row: row["mean_accuracy"]) if ok else None
    for row in rows:
        row["is_best"] = int(row is best)
    out = Path(out)
    cols = ["r", "t", "seed", "mean_accuracy", "std_accuracy", "is_best", "status", "error"]
    h = config_hash({"stage": "sweep", "dataset": name, "rs": list(rs), "ts": list(ts),
                     "seed": seed, "train": base, "c_grid": list(c_grid),
                     "gamma_factors": list(gamma_factors), "dedup": dedup})
    with atomic_path(out / "sweep.csv") as tmp:
        with open(tmp, "w", newline="") as fh:
            fh.write(f"# {format_header('anonfp-sweep', {'config_hash': h})}\n")
            w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    summary = {"config_hash": h, "typical_scale": best["r"] if best else None,
               "best_t": best["t"] if best else None,
               "best_mean_accuracy": best["mean_accuracy"] if best else None}
    with atomic_path(out / "sweep_summary.json") as tmp:
        tmp.write_text(json.dumps(summary, sort_keys=True) + "\n")
    return rows, best


# -- argument parsing --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": "UsageError", "message": message}) + "\n")
        sys.exit(2)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, _, rest = part.partition("..")
            hi, _, step = rest.partition(":")
            out += list(range(int(lo), int(hi) + 1, int(step or 1)))
        elif part:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="anonfp", description="Anonymous-walk PV-DBOW graph fingerprints.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data(sp):
        sp.add_argument("--dataset", required=True, help="directory holding the TU files")
        sp.add_argument("--name", required=True, help="dataset prefix, e.g. MUTAG")

    def walk(sp, many=False):
        if many:
            sp.add_argument("--r", type=_ints, default=[6, 7, 8, 9, 10],
                            help="scales, e.g. 6..10 or 6,8")
            sp.add_argument("--t", type=_ints, default=list(range(10, 161, 10)),
                            help="samples per node, e.g. 10..160:10")
        else:
            sp.add_argument("--r", type=int, required=True, help="walk length in steps")
            sp.add_argument("--t", type=int, required=True, help="walks rooted at every node")
        sp.add_argument("--dedup", action="store_true",
                        help="keep each anonymous walk once per graph")

    def embed(sp):
        sp.add_argument("--dim", type=int, default=128)
        sp.add_argument("--epochs", type=int, default=10)
        sp.add_argument("--negatives", type=int, default=5)
        sp.add_argument("--neg-mode", choices=NEGATIVE_MODES, default="global-uniform")
        sp.add_argument("--alpha", type=float, default=0.025, help="initial learning rate")
        sp.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                        help="single-threaded, bit-reproducible training (default)")
        sp.add_argument("--normalize", action="store_true", help="unit-norm fingerprints")

    def evalf(sp):
        sp.add_argument("--c-grid", type=_floats, default=list(DEFAULT_C_GRID))
        sp.add_argument("--gamma-grid", type=_floats, default=list(DEFAULT_GAMMA_FACTORS),
                        help="RBF widths as multiples of 1/d")

    sp = sub.add_parser("stats", help="dataset summary")
    data(sp)

    sp = sub.add_parser("sample", help="sample an anonymous-walk corpus")
    data(sp)
    walk(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("embed", help="train fingerprints from a corpus")
    sp.add_argument("--corpus", required=True)
    embed(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("eval", help="10-fold SVM evaluation of fingerprints")
    sp.add_argument("--fingerprints", required=True)
    sp.add_argument("--corpus", help="refuse to run unless fingerprints came from this corpus")
    evalf(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("sweep", help="grid over scale r and samples t")
    data(sp)
    walk(sp, many=True)
    embed(sp)
    evalf(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", required=True)
    return p


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(d=args.dim, K=args.negatives, alpha0=args.alpha, epochs=args.epochs,
                       seed=args.seed, negative_mode=args.neg_mode,
                       deterministic=args.deterministic, normalize=args.normalize)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "stats":
            s = run_stats(args.dataset, args.name)
            print("dataset\tgraphs\tpositive\tclasses\tmean_nodes\tmean_edges")
            print(f"{s['dataset']}\t{s['graphs']}\t{s['positive']}\t{s['classes']}\t"
                  f"{s['mean_nodes']:.2f}\t{s['mean_edges']:.2f}")
        elif args.command == "sample":
            path = run_sample(args.dataset, args.name, args.r, args.t, args.seed, args.out,
                              args.dedup)
            print(path)
        elif args.command == "embed":
            print(run_embed(args.corpus, args.out, _train_cfg(args)))
        elif args.command == "eval":
            report = run_eval(args.fingerprints, args.out, args.c_grid, args.gamma_grid,
                              args.seed, args.corpus)
            agg = report.aggregate()["accuracy"]
            print(f"accuracy {agg['mean']:.4f} +- {agg['std']:.4f} over {len(report.folds)} folds")
        elif args.command == "sweep":
            rows, best = run_sweep(args.dataset, args.name, args.r, args.t, args.seed, args.out,
                                   _train_cfg(args), args.c_grid, args.gamma_grid, args.dedup,
                                   args.workers)
            for row in rows:
                acc = row["mean_accuracy"]
                print(f"r={row['r']} t={row['t']} "
                      + (f"accuracy={acc:.4f}" if row["status"] == "ok" else row["error"]))
            if best:
                print(f"typical scale r={best['r']} (t={best['t']}, "
                      f"accuracy {best['mean_accuracy']:.4f})")
    except Exception as exc:
        logger.debug("failure", exc_info=True)
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
