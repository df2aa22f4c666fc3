import os

import numpy as np
import pytest

from taxosvm.spectra import LabeledDataset
from taxosvm.synthetic import make_dataset
from taxosvm.taxonomy import parse_tree


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy_tree():
    # two genera of two species plus a lone species under its own genus
    return parse_tree("(((A,B)g1,(C,D)g2)fam1,((E)g3)fam2)root;")


@pytest.fixture(scope="session")
def toy_data(toy_tree):
    counts = {c: (4, 8) for c in toy_tree.leaves}
    return make_dataset(toy_tree, counts, p=60, peaks_per_node=4, leaf_peaks=3,
                        strain_noise=0.2, spectrum_noise=0.1, dropout=0.05, seed=7).normalized()


def blobs(rng, K=3, n_per=10, p=5, sep=4.0):
    """Well separated Gaussian clusters, one per class, with two strains per class."""
    centers = rng.normal(size=(K, p)) * sep
    X = np.concatenate([centers[k] + rng.normal(scale=0.3, size=(n_per, p)) for k in range(K)])
    y = np.repeat(np.arange(K), n_per)
    strains = tuple(f"c{k}_s{i % 2}" for k in range(K) for i in range(n_per))
    return LabeledDataset(X, y, strains, tuple(f"S{k}" for k in range(K)))


MICROMASS_CSV = os.environ.get("MICROMASS_CSV")
