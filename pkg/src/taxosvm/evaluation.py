"""Strain-aware cross-validation, nested accuracy, error severity and the two-sample KS test."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from taxosvm.spectra import LabeledDataset
from taxosvm.taxonomy import MICROMASS_SEVERITY, SEVERITY_CATEGORIES, SeverityScale, TaxonomyTree, tree_distance


@dataclass(frozen=True)
class FoldPlan:
    """Folds as ``(train strains, test strains)`` pairs of tuples."""

    folds: tuple

    def __post_init__(self):
        seen = set()
        for train, test in self.folds:
            if set(train) & set(test):
                raise ValueError("a strain appears on both sides of a fold")
            if seen & set(test):
                raise ValueError("test sets overlap")
            seen |= set(test)

    def __len__(self):
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def make_loso_folds(data: LabeledDataset) -> FoldPlan:
    """One fold per strain, in order of first appearance."""
    strains = data.strains()
    return FoldPlan(
        tuple((tuple(s for s in strains if s != held), (held,)) for held in strains)
    )


def make_inner_folds(strains, n_folds: int = 10, seed=0) -> FoldPlan:
    """Random partition of ``strains`` into ``n_folds`` groups whose sizes differ by at most one.

    ``seed`` is anything ``numpy.random.default_rng`` accepts, e.g. ``(global_seed, outer_fold)``.
    """
    strains = list(dict.fromkeys(strains))
    if len(strains) < n_folds:
        raise ValueError(f"{len(strains)} strains cannot fill {n_folds} folds")
    perm = np.random.default_rng(seed).permutation(len(strains))
    groups = [[] for _ in range(n_folds)]
    for pos, k in enumerate(perm):
        groups[pos % n_folds].append(strains[k])
    folds = []
    for g in groups:
        test = tuple(s for s in strains if s in set(g))
        train = tuple(s for s in strains if s not in set(g))
        folds.append((train, test))
    return FoldPlan(tuple(folds))


@dataclass(frozen=True)
class PredictionRecord:
    index: int
    strain: object
    true: int
    pred: int
    fold: int = 0
    C: float | None = None


def records_from(data: LabeledDataset, idx, pred, fold=0, C=None) -> list:
    return [
        PredictionRecord(int(i), data.strain_ids[i], int(data.labels[i]), int(p), fold, C)
        for i, p in zip(idx, pred)
    ]


def nested_accuracy(records, species=None):
    """Strain accuracy, its per-species mean, and the mean over species.

    Returns ``(per_strain, per_species, overall)`` where the dicts are keyed
    by strain id and species id.  When ``species`` is given every listed
    species must have at least one record.
    """
    hits: dict = {}
    owner: dict = {}
    for r in records:
        h = hits.setdefault(r.strain, [0, 0])
        h[0] += r.true == r.pred
        h[1] += 1
        owner[r.strain] = r.true
    per_strain = {s: c / n for s, (c, n) in hits.items()}
    grouped: dict = {}
    for s, acc in per_strain.items():
        grouped.setdefault(owner[s], []).append(acc)
    if species is not None:
        missing = sorted(set(species) - set(grouped))
        if missing:
            raise ValueError(f"species without any evaluated strain: {missing}")
    per_species = {k: math.fsum(v) / len(v) for k, v in sorted(grouped.items())}
    if not per_species:
        raise ValueError("no records")
    overall = math.fsum(per_species.values()) / len(per_species)
    return per_strain, per_species, overall


def severity_breakdown(records, tree: TaxonomyTree, species_codes, scale: SeverityScale = MICROMASS_SEVERITY) -> dict:
    """Counts of records per severity category of the tree loss ``Delta(true, pred)``."""
    counts = dict.fromkeys(SEVERITY_CATEGORIES, 0)
    for r in records:
        d = tree_distance(tree, species_codes[r.true], species_codes[r.pred])
        counts[scale.categorize(d)] += 1
    return counts


def confusion_pairs(*record_sets, species_codes=None) -> list:
    """``((true, predicted), count)`` over all misclassified records of all sets.

    Sorted by decreasing count, ties in lexicographic order of the pair.
    Labels are reported as species codes when ``species_codes`` is given.
    """
    c = Counter()
    for recs in record_sets:
        for r in recs:
            if r.true != r.pred:
                key = (r.true, r.pred) if species_codes is None else (species_codes[r.true], species_codes[r.pred])
                c[key] += 1
    return sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))


def kolmogorov_q(lam: float) -> float:
    """Survival function ``Q(lam) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2)``."""
    if lam < 0.2:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < 1e-16 * max(total, 1e-300):
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a, b):
    """Two-sided two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    Returns ``(D, p)`` where the p-value is ``Q((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D)``
    with effective size ``ne = n m / (n + m)``.
    """
    D = ks_statistic(a, b)
    n, m = len(a), len(b)
    ne = n * m / (n + m)
    lam = (math.sqrt(ne) + 0.12 + 0.11 / math.sqrt(ne)) * D
    return D, kolmogorov_q(lam)


def grid_search_C(fit_predict, data: LabeledDataset, grid, n_folds: int = 10, seed=0):
    """Pick ``C`` maximizing inner-CV nested accuracy over strain-grouped folds.

    ``fit_predict(train, C)`` must return a callable mapping a spectra matrix
    to species ids.  Ties go to the smallest ``C``.  Returns ``(C, scores)``
    with ``scores`` mapping every grid value to its nested accuracy.
    """
    grid = sorted(float(c) for c in grid)
    if not grid:
        raise ValueError("empty C grid")
    if len(grid) == 1:
        return grid[0], {}
    plan = make_inner_folds(data.strains(), n_folds, seed)
    splits = [(data.indices_of_strains(tr), data.indices_of_strains(te)) for tr, te in plan]
    scores = {}
    for C in grid:
        recs = []
        for f, (tr, te) in enumerate(splits):
            predict = fit_predict(data.subset(tr), C)
            recs += records_from(data, te, predict(data.X[te]), f, C)
        scores[C] = nested_accuracy(recs)[2]
    best = max(scores.values())
    return next(C for C in grid if scores[C] == best), scores
