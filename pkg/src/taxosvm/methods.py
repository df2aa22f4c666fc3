"""The ten benchmarked classifiers behind one ``fit`` entry point, plus model files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from taxosvm.baselines import CentroidModel, ForestModel, NearestNeighborModel, train_1nn, train_centroid, train_rf
from taxosvm.composite import (
    CascadeModel,
    OvaModel,
    OvoModel,
    build_dendrogram,
    train_cascade,
    train_ova,
    train_ovo,
)
from taxosvm.linear import BinaryTrainConfig
from taxosvm.spectra import LabeledDataset
from taxosvm.structured import JointFeatureMap, StructTrainConfig, StructuredModel, train_one_slack
from taxosvm.taxonomy import TaxonomyTree, loss_matrix

METHODS = ("1nn", "centroid", "rf", "svm-ovo", "svm-ova", "multiclass", "treeloss", "structured", "coc", "dsvm")
SVM_METHODS = frozenset({"svm-ovo", "svm-ova", "multiclass", "treeloss", "structured", "coc", "dsvm"})
TREE_METHODS = frozenset({"treeloss", "structured", "coc"})
DISPLAY_NAMES = {
    "1nn": "1-NN",
    "centroid": "1-Centroid",
    "rf": "RF",
    "svm-ovo": "SVM-OVO",
    "svm-ova": "SVM-OVA",
    "multiclass": "Multiclass",
    "treeloss": "TreeLoss",
    "structured": "Structured",
    "coc": "CoC",
    "dsvm": "DSVM",
}
MODEL_FORMAT = "taxosvm-model"
MODEL_VERSION = 1

_MODEL_TYPES = {
    "1nn": NearestNeighborModel,
    "centroid": CentroidModel,
    "rf": ForestModel,
    "svm-ovo": OvoModel,
    "svm-ova": OvaModel,
    "multiclass": StructuredModel,
    "treeloss": StructuredModel,
    "structured": StructuredModel,
    "coc": CascadeModel,
    "dsvm": CascadeModel,
}


@dataclass(frozen=True)
class MethodSettings:
    """Solver settings shared by every fold; ``C`` is chosen separately."""

    epsilon: float = 0.1
    svm_tol: float = 1e-3
    svm_max_iter: int = 100_000
    max_cuts: int = 2000
    n_trees: int = 500
    mtry: int | None = None


def check_method(name: str) -> str:
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return name


def fit(method: str, train: LabeledDataset, C: float | None = None, tree: TaxonomyTree | None = None,
        settings: MethodSettings = MethodSettings(), seed: int = 0):
    """Train ``method`` on ``train``; the result has ``predict(X) -> species ids``."""
    check_method(method)
    X, y, codes, K = train.X, train.labels, train.species_codes, train.K
    if method in SVM_METHODS and C is None:
        raise ValueError(f"{method} needs a C value")
    if method in TREE_METHODS and tree is None:
        raise ValueError(f"{method} needs a taxonomy tree")
    bcfg = BinaryTrainConfig(C=C or 1.0, tol=settings.svm_tol, max_iter=settings.svm_max_iter, seed=seed)

    if method == "1nn":
        return train_1nn(X, y)
    if method == "centroid":
        return train_centroid(X, y, K)
    if method == "rf":
        return train_rf(X, y, K, n_trees=settings.n_trees, mtry=settings.mtry, seed=seed)
    if method == "svm-ova":
        return train_ova(X, y, codes, cfg=bcfg, gram=train.gram)
    if method == "svm-ovo":
        return train_ovo(X, y, codes, cfg=bcfg, gram=train.gram)
    if method == "coc":
        return train_cascade(tree, X, y, codes, cfg=bcfg, gram=train.gram)
    if method == "dsvm":
        return train_cascade(build_dendrogram(X, y, codes), X, y, codes, cfg=bcfg, gram=train.gram)

    if method == "multiclass":
        fmap, loss = JointFeatureMap.class_indicator(codes), None
    elif method == "treeloss":
        fmap, loss = JointFeatureMap.class_indicator(codes), loss_matrix(tree, codes)
    else:
        fmap, loss = JointFeatureMap.tree_path(tree, codes), loss_matrix(tree, codes)
    scfg = StructTrainConfig(C=C, epsilon=settings.epsilon, rescaling="slack", loss=loss, max_cuts=settings.max_cuts)
    return train_one_slack(X, y, fmap, scfg, gram=train.gram)


def is_converged(model) -> bool:
    """False if any solver inside ``model`` stopped on its iteration cap."""
    if isinstance(model, StructuredModel):
        return model.converged
    if isinstance(model, OvaModel):
        return all(m.converged for m in model.models)
    if isinstance(model, OvoModel):
        return all(m.converged for m in model.models.values())
    if isinstance(model, CascadeModel):
        return all(m.converged for nd in model.nodes.values() for m in nd.models)
    return True


def save_model(path, method: str, model, species_codes, p: int) -> None:
    record = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "method": check_method(method),
        "p": int(p),
        "species_codes": list(species_codes),
        "model": model.to_dict(),
    }
    Path(path).write_text(json.dumps(record), encoding="utf-8")


def load_model(path):
    """Read a model file; returns ``(method, model, species_codes, p)``."""
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    if record.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if record.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {record.get('version')}")
    method = check_method(record["method"])
    model = _MODEL_TYPES[method].from_dict(record["model"])
    return method, model, tuple(record["species_codes"]), int(record["p"])
