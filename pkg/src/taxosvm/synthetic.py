"""Synthetic peak-list datasets shaped after a taxonomy.

Used by the test suite and the smoke benchmark when the real MicroMass
matrix is not at hand.  Each tree node owns a few random peak bins; a
species switches on the peaks of every node on its root path, strains
perturb the species profile and spectra add technical noise.
"""

from __future__ import annotations

import csv
from importlib import resources

import numpy as np

from taxosvm.spectra import LabeledDataset
from taxosvm.taxonomy import TaxonomyTree, micromass_tree, path_to_root


def micromass_counts() -> dict:
    """Per-species ``(n_strains, n_spectra)`` of the public MicroMass release."""
    text = resources.files("taxosvm.data").joinpath("micromass_species.csv").read_text("utf-8")
    rows = csv.DictReader(text.splitlines())
    return {r["species_code"]: (int(r["n_strains"]), int(r["n_spectra"])) for r in rows}


def _split_spectra(n_strains, n_spectra, rng, max_per_strain=6):
    sizes = np.ones(n_strains, dtype=np.int64)
    for _ in range(n_spectra - n_strains):
        open_ = np.flatnonzero(sizes < max_per_strain)
        sizes[rng.choice(open_)] += 1
    return sizes


def make_dataset(tree: TaxonomyTree, counts: dict, p: int = 1300, peaks_per_node: int = 8,
                 leaf_peaks: int = 2, strain_noise: float = 0.6, spectrum_noise: float = 0.2,
                 dropout: float = 0.3, seed: int = 0) -> LabeledDataset:
    """Draw a dataset with ``counts[code] = (n_strains, n_spectra)`` for every leaf code.

    Leaves own only ``leaf_peaks`` bins, so sibling species differ by a few
    peaks and most confusions stay within a genus.  Larger ``strain_noise``
    makes strains of one species less alike.
    """
    rng = np.random.default_rng(seed)
    codes = tuple(sorted(counts))
    node_peaks = {}
    for u in range(tree.n_nodes):
        k = leaf_peaks if not tree.children[u] else peaks_per_node
        bins = rng.choice(p, size=k, replace=False)
        node_peaks[u] = (bins, rng.uniform(0.5, 2.0, size=k))

    X, labels, strains, ids = [], [], [], []
    for k, code in enumerate(codes):
        profile = np.zeros(p)
        for u in path_to_root(tree, code):
            bins, amp = node_peaks[u]
            profile[bins] += amp
        n_strains, n_spectra = counts[code]
        for s, size in enumerate(_split_spectra(n_strains, n_spectra, rng)):
            strain = profile * rng.lognormal(0.0, strain_noise, size=p)
            extra = rng.choice(p, size=3, replace=False)
            strain[extra] += rng.uniform(0.2, 1.0, size=3)
            for r in range(size):
                x = strain * rng.lognormal(0.0, spectrum_noise, size=p)
                x[rng.random(p) < dropout] = 0.0
                if not x.any():
                    x[node_peaks[tree.leaf(code)][0][0]] = 1.0
                X.append(x)
                labels.append(k)
                strains.append(f"{code}_s{s:02d}")
                ids.append(f"{code}_s{s:02d}_r{r}")
    return LabeledDataset(np.array(X), np.array(labels), tuple(strains), codes, tuple(ids))


def micromass_like(seed: int = 0, p: int = 1300, **kw) -> LabeledDataset:
    """571 spectra / 213 strains / 20 species laid out on the shipped taxonomy."""
    return make_dataset(micromass_tree(), micromass_counts(), p=p, seed=seed, **kw)
