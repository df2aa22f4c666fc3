"""Peak-list spectra: dataset container, CSV ingestion and unit-norm scaling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Raised when a dataset file or container violates its invariants."""


@dataclass(frozen=True)
class CsvSchema:
    """Names of the three metadata columns; every remaining column is a feature bin."""

    spectrum_id: str = "spectrum_id"
    strain_id: str = "strain_id"
    species_code: str = "species_code"


@dataclass(frozen=True)
class LabeledDataset:
    """Spectra with species labels and strain identifiers.

    ``X`` is an ``(N, p)`` float64 array, ``labels`` holds species ids in
    ``[0, K)`` indexing ``species_codes``.  Arrays are made read-only so the
    container can be shared between workers.
    """

    X: np.ndarray
    labels: np.ndarray
    strain_ids: tuple
    species_codes: tuple
    spectrum_ids: tuple = field(default=())

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise DatasetError("X must be two-dimensional")
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        n = X.shape[0]
        if labels.shape[0] != n or len(self.strain_ids) != n:
            raise DatasetError(
                f"length mismatch: {n} spectra, {labels.shape[0]} labels, "
                f"{len(self.strain_ids)} strain ids"
            )
        spectrum_ids = tuple(self.spectrum_ids) or tuple(str(i) for i in range(n))
        if len(spectrum_ids) != n:
            raise DatasetError("spectrum_ids length mismatch")
        if len(set(self.species_codes)) != len(self.species_codes):
            raise DatasetError("species codes must be unique")
        K = len(self.species_codes)
        if n and (labels.min() < 0 or labels.max() >= K):
            raise DatasetError("label out of range of the species table")
        if not np.all(np.isfinite(X)):
            raise DatasetError("non-finite intensity")
        owner = {}
        for s, y in zip(self.strain_ids, labels.tolist()):
            if owner.setdefault(s, y) != y:
                raise DatasetError(
                    f"strain {s!r} observed with species "
                    f"{self.species_codes[owner[s]]} and {self.species_codes[y]}"
                )
        X.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "strain_ids", tuple(self.strain_ids))
        object.__setattr__(self, "species_codes", tuple(self.species_codes))
        object.__setattr__(self, "spectrum_ids", spectrum_ids)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def K(self) -> int:
        return len(self.species_codes)

    def strains(self) -> list:
        """Distinct strain ids in order of first appearance."""
        return list(dict.fromkeys(self.strain_ids))

    def strain_species(self) -> dict:
        return {s: int(y) for s, y in zip(self.strain_ids, self.labels)}

    @property
    def gram(self) -> np.ndarray:
        """``X X'``, computed on first use and sliced (not recomputed) by :meth:`subset`."""
        g = self.__dict__.get("_gram")
        if g is None:
            g = self.X @ self.X.T
            g.setflags(write=False)
            object.__setattr__(self, "_gram", g)
        return g

    def subset(self, idx) -> "LabeledDataset":
        """Rows ``idx`` with the species table kept intact."""
        idx = np.asarray(idx, dtype=np.int64)
        sub = LabeledDataset(
            X=self.X[idx],
            labels=self.labels[idx],
            strain_ids=tuple(self.strain_ids[i] for i in idx),
            species_codes=self.species_codes,
            spectrum_ids=tuple(self.spectrum_ids[i] for i in idx),
        )
        g = self.__dict__.get("_gram")
        if g is not None:
            g = g[np.ix_(idx, idx)]
            g.setflags(write=False)
            object.__setattr__(sub, "_gram", g)
        return sub

    def indices_of_strains(self, strains) -> np.ndarray:
        wanted = set(strains)
        return np.array(
            [i for i, s in enumerate(self.strain_ids) if s in wanted], dtype=np.int64
        )

    def normalized(self) -> "LabeledDataset":
        return LabeledDataset(
            X=normalize_rows(self.X),
            labels=self.labels,
            strain_ids=self.strain_ids,
            species_codes=self.species_codes,
            spectrum_ids=self.spectrum_ids,
        )


def normalize_unit_norm(s) -> np.ndarray:
    """Scale a spectrum to unit Euclidean norm.

    Raises
    ------
    ValueError
        If the spectrum is identically zero.
    """
    s = np.asarray(s, dtype=np.float64)
    norm = np.linalg.norm(s)
    if norm == 0.0:
        raise ValueError("cannot normalize an all-zero spectrum")
    return s / norm


def normalize_rows(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ValueError(f"cannot normalize all-zero spectrum at row {bad}")
    return X / norms[:, None]


def _parse_intensity(text, row_no, col):
    try:
        v = float(text)
    except ValueError:
        raise DatasetError(f"row {row_no}: column {col!r} is not a number: {text!r}")
    if not math.isfinite(v) or v < 0:
        raise DatasetError(f"row {row_no}: column {col!r} has invalid intensity {v}")
    return v


def load_dataset(matrix_path, schema: CsvSchema | None = None, species_table=None) -> LabeledDataset:
    """Read the canonical CSV layout into a :class:`LabeledDataset`.

    The header names the three metadata columns followed by the ``p`` feature
    columns in ascending bin order.  When ``species_table`` (a sequence of
    species codes) is given it fixes the label ids and rows with any other code
    are rejected; otherwise codes are numbered in sorted order.
    """
    schema = schema or CsvSchema()
    path = Path(matrix_path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file")
        meta = [schema.spectrum_id, schema.strain_id, schema.species_code]
        if header[:3] != meta:
            raise DatasetError(f"{path}: header must start with {','.join(meta)}")
        feature_cols = header[3:]
        p = len(feature_cols)
        if p == 0:
            raise DatasetError(f"{path}: no feature columns")
        ids, strains, codes, rows = [], [], [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 3:
                raise DatasetError(f"row {row_no}: expected {p + 3} fields, got {len(row)}")
            ids.append(row[0])
            strains.append(row[1])
            codes.append(row[2])
            rows.append([_parse_intensity(v, row_no, c) for v, c in zip(row[3:], feature_cols)])

    if species_table is not None:
        table = tuple(species_table)
        known = {c: i for i, c in enumerate(table)}
        unknown = sorted(set(codes) - set(known))
        if unknown:
            raise DatasetError(f"unknown species codes: {', '.join(unknown)}")
    else:
        table = tuple(sorted(set(codes)))
        known = {c: i for i, c in enumerate(table)}

    X = np.array(rows, dtype=np.float64).reshape(len(rows), p)
    return LabeledDataset(
        X=X,
        labels=np.array([known[c] for c in codes], dtype=np.int64),
        strain_ids=tuple(strains),
        species_codes=table,
        spectrum_ids=tuple(ids),
    )


def write_dataset(d: LabeledDataset, path, schema: CsvSchema | None = None, precision: int = 17):
    """Write ``d`` in the canonical CSV layout (round-trips exactly at the default precision)."""
    schema = schema or CsvSchema()
    width = max(4, len(str(d.p)))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            [schema.spectrum_id, schema.strain_id, schema.species_code]
            + [f"f{j + 1:0{width}d}" for j in range(d.p)]
        )
        for i in range(d.n):
            w.writerow(
                [d.spectrum_ids[i], d.strain_ids[i], d.species_codes[d.labels[i]]]
                + [format(v, f".{precision}g") for v in d.X[i]]
            )


def dataset_summary(d: LabeledDataset) -> dict:
    """Per-species ``(n_strains, n_spectra)`` keyed by species code.

    Species with no spectra are omitted, so an empty dataset yields ``{}``.
    """
    strains: dict = {}
    spectra: dict = {}
    for s, y in zip(d.strain_ids, d.labels.tolist()):
        code = d.species_codes[y]
        strains.setdefault(code, set()).add(s)
        spectra[code] = spectra.get(code, 0) + 1
    return {code: (len(strains[code]), spectra[code]) for code in sorted(spectra)}
