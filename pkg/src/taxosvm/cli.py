"""Command-line entry point: ``taxosvm bench | train | predict | summary``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from taxosvm import methods as M
from taxosvm.benchmark import BenchmarkConfig, parse_value, read_config_file, run_benchmark
from taxosvm.spectra import DatasetError, dataset_summary, load_dataset, normalize_rows
from taxosvm.taxonomy import TreeError, load_tree, micromass_tree

log = logging.getLogger("taxosvm")

_BENCH_FLAGS = ("dataset", "tree", "methods", "grid", "epsilon", "seed", "jobs", "out", "smoke",
                "inner_folds", "n_trees", "max_folds")


def _bench_config(args) -> BenchmarkConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in _BENCH_FLAGS:
        v = getattr(args, key)
        if v is None:
            continue
        values[key] = v if key == "smoke" else parse_value(key, str(v))
    return BenchmarkConfig(**values)


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    report = run_benchmark(cfg)
    for m, r in report["methods"].items():
        c = r["counts"]
        print(f"{r['name']:<11} {100 * r['accuracy']:5.1f}  {c['correct']:4d} {c['within_genus']:4d} "
              f"{c['within_gram']:4d} {c['distinct_gram']:4d}")
    for key, k in report["ks_headline"].items():
        print(f"KS {key}: D={k['D']:.3f} p={k['p']:.4f}")
    return 0


def cmd_train(args) -> int:
    data = load_dataset(args.dataset).normalized()
    tree = load_tree(args.tree) if args.tree else micromass_tree()
    if args.method in M.SVM_METHODS and args.C is None:
        raise SystemExit(f"error: --C is required for {args.method}")
    model = M.fit(args.method, data, args.C, tree, M.MethodSettings(epsilon=args.epsilon, n_trees=args.n_trees),
                  seed=args.seed)
    M.save_model(args.out, args.method, model, data.species_codes, data.p)
    if not M.is_converged(model):
        log.warning("solver stopped on its iteration cap")
    return 0


def read_spectra(path):
    """``spectrum_id`` then features; ``strain_id``/``species_code`` columns, if present, are skipped."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "spectrum_id":
        raise DatasetError(f"{path}: header must start with spectrum_id")
    skip = 3 if rows[0][1:3] == ["strain_id", "species_code"] else 1
    ids = [r[0] for r in rows[1:] if r]
    X = np.array([[float(v) for v in r[skip:]] for r in rows[1:] if r], dtype=np.float64)
    return ids, X.reshape(len(ids), len(rows[0]) - skip)


def cmd_predict(args) -> int:
    method, model, codes, p = M.load_model(args.model)
    ids, X = read_spectra(args.spectra)
    if X.shape[1] != p:
        raise DatasetError(f"dimension mismatch: model expects p={p}, spectra have {X.shape[1]} features")
    pred = model.predict(normalize_rows(X))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["spectrum_id", "predicted"])
        for i, k in zip(ids, pred):
            w.writerow([i, codes[int(k)]])
    return 0


def cmd_summary(args) -> int:
    data = load_dataset(args.dataset)
    print("species,n_strains,n_spectra")
    for code, (s, n) in dataset_summary(data).items():
        print(f"{code},{s},{n}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="taxosvm", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run the leave-one-strain-out benchmark")
    b.add_argument("--config", help="flat key = value file; flags override its entries")
    b.add_argument("--dataset")
    b.add_argument("--tree", help="Newick taxonomy (default: shipped MicroMass tree)")
    b.add_argument("--methods", help=f"comma list from {','.join(M.METHODS)}")
    b.add_argument("--grid", help="comma list of log10(C) values")
    b.add_argument("--epsilon", type=float)
    b.add_argument("--seed", type=int)
    b.add_argument("--jobs", type=int)
    b.add_argument("--out")
    b.add_argument("--smoke", action="store_const", const=True, default=None,
                   help="first 20 outer folds and a 3-point C grid")
    b.add_argument("--inner-folds", dest="inner_folds", type=int)
    b.add_argument("--n-trees", dest="n_trees", type=int)
    b.add_argument("--max-folds", dest="max_folds", type=int)
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("train", help="fit one method on a dataset and save it")
    t.add_argument("--method", required=True, choices=M.METHODS)
    t.add_argument("--dataset", required=True)
    t.add_argument("--tree")
    t.add_argument("--C", type=float)
    t.add_argument("--epsilon", type=float, default=0.1)
    t.add_argument("--n-trees", dest="n_trees", type=int, default=500)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label spectra with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--spectra", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    s = sub.add_parser("summary", help="per-species strain and spectrum counts")
    s.add_argument("--dataset", required=True)
    s.set_defaults(func=cmd_summary)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DatasetError, TreeError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
