"""Leave-one-strain-out benchmark protocol and report files."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from taxosvm import methods as M
from taxosvm.evaluation import (
    confusion_pairs,
    grid_search_C,
    ks_two_sample,
    make_loso_folds,
    nested_accuracy,
    records_from,
    severity_breakdown,
)
from taxosvm.spectra import LabeledDataset, load_dataset
from taxosvm.taxonomy import SEVERITY_CATEGORIES, TaxonomyTree, load_tree, micromass_tree

log = logging.getLogger("taxosvm.benchmark")

REPORT_VERSION = 1
DEFAULT_GRID = (-6, -4, -2, 0, 2, 4, 6)
SMOKE_GRID = (0, 2, 4)
SMOKE_FOLDS = 20
SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class BenchmarkConfig:
    dataset: str | None = None
    tree: str | None = None
    methods: tuple = M.METHODS
    grid: tuple = DEFAULT_GRID
    epsilon: float = 0.1
    seed: int = 0
    jobs: int = 1
    out: str = "results"
    smoke: bool = False
    inner_folds: int = 10
    n_trees: int = 500
    max_folds: int | None = None

    def __post_init__(self):
        for m in self.methods:
            M.check_method(m)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if not self.grid:
            raise ValueError("empty C grid")

    @property
    def settings(self) -> M.MethodSettings:
        return M.MethodSettings(epsilon=self.epsilon, n_trees=self.n_trees)

    @property
    def effective_grid(self) -> tuple:
        return SMOKE_GRID if self.smoke else tuple(self.grid)

    @property
    def fold_limit(self) -> int | None:
        if self.max_folds is not None:
            return self.max_folds
        return SMOKE_FOLDS if self.smoke else None


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(BenchmarkConfig)}


def parse_value(key: str, text: str):
    """Convert a config-file or flag string for ``key`` to its field type."""
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown config key {key!r}")
    text = text.strip()
    if key == "methods":
        return tuple(m.strip() for m in text.split(",") if m.strip())
    if key == "grid":
        return tuple(float(v) for v in text.split(",") if v.strip())
    if key == "smoke":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"smoke must be a boolean, got {text!r}")
    if key in ("epsilon",):
        return float(text)
    if key in ("seed", "jobs", "inner_folds", "n_trees", "max_folds"):
        return int(text)
    return text


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{no}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        out[key] = parse_value(key, value)
    return out


def _seed_for(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


@dataclass
class FoldResult:
    method: str
    fold: int
    records: list
    C: float | None = None
    grid_scores: dict = field(default_factory=dict)
    converged: bool = True
    seconds: float = 0.0


def run_fold(data: LabeledDataset, tree: TaxonomyTree, method: str, fold: int, train_strains, test_strains,
             cfg: BenchmarkConfig) -> FoldResult:
    """Inner grid search (SVM family), final fit on the outer training strains, test predictions."""
    start = time.perf_counter()
    tr = data.indices_of_strains(train_strains)
    te = data.indices_of_strains(test_strains)
    train = data.subset(tr)
    settings = cfg.settings
    seed = _seed_for(cfg.seed, fold)
    C, scores = None, {}
    if method in M.SVM_METHODS:
        def fit_predict(sub, c):
            return M.fit(method, sub, c, tree, settings, seed).predict

        grid = [10.0 ** e for e in cfg.effective_grid]
        C, scores = grid_search_C(fit_predict, train, grid, cfg.inner_folds, seed=(cfg.seed, fold))
    model = M.fit(method, train, C, tree, settings, seed)
    pred = model.predict(data.X[te])
    return FoldResult(
        method, fold, records_from(data, te, pred, fold, C), C, scores,
        M.is_converged(model), time.perf_counter() - start,
    )


_WORKER = {}


def _init_worker(data, tree, cfg):
    _WORKER.update(data=data, tree=tree, cfg=cfg)


def _run_task(task):
    method, fold, train_strains, test_strains = task
    return run_fold(_WORKER["data"], _WORKER["tree"], method, fold, train_strains, test_strains, _WORKER["cfg"])


def run_protocol(data: LabeledDataset, tree: TaxonomyTree, cfg: BenchmarkConfig, on_result=None) -> dict:
    """Every (method, outer fold) pipeline; returns ``{method: [FoldResult, ...]}`` in fold order.

    Fold pipelines run in up to ``cfg.jobs`` processes; results are reordered
    so the outcome does not depend on completion order.
    """
    plan = make_loso_folds(data)
    folds = list(plan)[: cfg.fold_limit] if cfg.fold_limit else list(plan)
    tasks = [(m, k, tr, te) for m in cfg.methods for k, (tr, te) in enumerate(folds)]
    if any(m in M.SVM_METHODS for m in cfg.methods):
        data.gram  # computed once; fold and inner-fold subsets slice it
    results = []
    if cfg.jobs == 1:
        _init_worker(data, tree, cfg)
        for t in tasks:
            r = _run_task(t)
            if on_result:
                on_result(r)
            results.append(r)
    else:
        with ProcessPoolExecutor(cfg.jobs, initializer=_init_worker, initargs=(data, tree, cfg)) as ex:
            for r in ex.map(_run_task, tasks, chunksize=1):
                if on_result:
                    on_result(r)
                results.append(r)
    out = {m: [] for m in cfg.methods}
    for r in sorted(results, key=lambda r: (cfg.methods.index(r.method), r.fold)):
        out[r.method].append(r)
    return out


def summarize(data: LabeledDataset, tree: TaxonomyTree, fold_results: dict) -> dict:
    """Report dictionary: per-method accuracies, severity counts, KS comparisons, confusions."""
    codes = data.species_codes
    report_methods = {}
    species_vectors = {}
    all_records = {}
    for method, results in fold_results.items():
        recs = sorted((r for fr in results for r in fr.records), key=lambda r: r.index)
        all_records[method] = recs
        per_strain, per_species, overall = nested_accuracy(recs)
        counts = severity_breakdown(recs, tree, codes)
        species_vectors[method] = per_species
        report_methods[method] = {
            "name": M.DISPLAY_NAMES[method],
            "accuracy": overall,
            "n_records": len(recs),
            "counts": counts,
            "per_species": {codes[k]: v for k, v in per_species.items()},
            "per_strain": {str(s): v for s, v in sorted(per_strain.items(), key=lambda kv: str(kv[0]))},
            "chosen_C": [fr.C for fr in results],
            "non_converged_folds": [fr.fold for fr in results if not fr.converged],
        }

    def ks(a, b):
        common = sorted(set(species_vectors[a]) & set(species_vectors[b]))
        D, p = ks_two_sample([species_vectors[a][k] for k in common], [species_vectors[b][k] for k in common])
        return {"a": a, "b": b, "n_species": len(common), "D": D, "p": p, "significant": p < SIGNIFICANCE}

    names = list(fold_results)
    comparisons = [ks(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    headline = {}
    svms = [m for m in names if m in M.SVM_METHODS]
    if svms and "rf" in names:
        best = max(svms, key=lambda m: (report_methods[m]["accuracy"], -names.index(m)))
        headline["best_svm_vs_rf"] = ks(best, "rf")
    if "rf" in names and "1nn" in names:
        headline["rf_vs_1nn"] = ks("rf", "1nn")
    if "structured" in names and "svm-ova" in names:
        headline["structured_vs_svm_ova"] = ks("structured", "svm-ova")

    return {
        "version": REPORT_VERSION,
        "n_spectra": data.n,
        "n_strains": len(data.strains()),
        "species_codes": list(codes),
        "tree_sha256": tree.digest(),
        "methods": report_methods,
        "ks": comparisons,
        "ks_headline": headline,
        "confusions": [
            {"true": t, "predicted": p, "count": c}
            for (t, p), c in confusion_pairs(*all_records.values(), species_codes=codes)
        ],
        "_records": all_records,
    }


def write_reports(report: dict, data: LabeledDataset, out) -> None:
    out = Path(out)
    (out / "predictions").mkdir(parents=True, exist_ok=True)
    records = report["_records"]
    body = {k: v for k, v in report.items() if k != "_records"}
    (out / "report.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    with (out / "table.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "accuracy", "n_correct", "n_within_genus", "n_within_gram", "n_distinct_gram"])
        for m, r in body["methods"].items():
            w.writerow([r["name"], f"{100 * r['accuracy']:.1f}"] + [r["counts"][c] for c in SEVERITY_CATEGORIES])

    with (out / "confusions.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["true", "predicted", "count"])
        for c in body["confusions"]:
            w.writerow([c["true"], c["predicted"], c["count"]])

    codes = data.species_codes
    for m, recs in records.items():
        with (out / "predictions" / f"{m}.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["spectrum_id", "strain_id", "true", "predicted", "fold", "C"])
            for r in recs:
                w.writerow([data.spectrum_ids[r.index], r.strain, codes[r.true], codes[r.pred], r.fold,
                            "" if r.C is None else repr(r.C)])


def load_inputs(cfg: BenchmarkConfig, data: LabeledDataset | None = None, tree: TaxonomyTree | None = None):
    """Dataset (unit-normalized) and tree named by ``cfg``, unless given directly."""
    if tree is None:
        tree = load_tree(cfg.tree) if cfg.tree else micromass_tree()
    if data is None:
        if not cfg.dataset:
            raise ValueError("no dataset given")
        data = load_dataset(cfg.dataset).normalized()
    missing = set(data.species_codes) - set(tree.leaves)
    if missing:
        raise ValueError(f"tree lacks leaves for species: {', '.join(sorted(missing))}")
    return data, tree


def run_benchmark(cfg: BenchmarkConfig, data: LabeledDataset | None = None, tree: TaxonomyTree | None = None) -> dict:
    """Run the full protocol and write ``report.json``, ``table.csv``, ``confusions.csv``,
    ``predictions/<method>.csv`` and ``run.log`` under ``cfg.out``.

    ``data`` (already unit-normalized) and ``tree`` override the paths in ``cfg``.
    """
    data, tree = load_inputs(cfg, data, tree)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "run.log").open("w", encoding="utf-8") as logfh:
        def on_result(r: FoldResult):
            rec = {
                "method": r.method, "fold": r.fold, "C": r.C, "seconds": round(r.seconds, 4),
                "converged": r.converged, "n_test": len(r.records), "pid": os.getpid(),
            }
            logfh.write(json.dumps(rec) + "\n")
            logfh.flush()
            log.info("%s fold %d done in %.2fs", r.method, r.fold, r.seconds)

        fold_results = run_protocol(data, tree, cfg, on_result)
    report = summarize(data, tree, fold_results)
    write_reports(report, data, out)
    for m, r in report["methods"].items():
        if r["non_converged_folds"]:
            log.warning("%s: solver hit its iteration cap in folds %s", m, r["non_converged_folds"])
    return report
