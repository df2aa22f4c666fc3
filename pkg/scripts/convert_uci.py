#!/usr/bin/env python3
"""One-shot converter from the UCI MicroMass release to the canonical CSV.

The UCI archive ships the peak matrix and the sample metadata as two files
(``pure_spectra_matrix.csv`` and ``pure_spectra_metadata.csv``, rows in the
same order).  This script joins them into one file with the header
``spectrum_id,strain_id,species_code,f0001..f1300``:

    python scripts/convert_uci.py \\
        --matrix MicroMass/pure_spectra_matrix.csv \\
        --metadata MicroMass/pure_spectra_metadata.csv \\
        --out micromass.csv

Column names of the metadata file are guessed (case-insensitively) and can
be forced with ``--strain-col``/``--species-col``/``--id-col``.  Species may
be given as codes (``ESH.COL``) or names (``Escherichia coli``); both are
mapped onto the codes of the shipped species table.  The converter stops on
anything it cannot map instead of guessing.
"""

import argparse
import csv
import re
import sys
from importlib import resources

STRAIN_GUESSES = ("strain", "strain_id", "strain.id", "strainid")
SPECIES_GUESSES = ("species", "species_code", "specie", "class", "label")
ID_GUESSES = ("identifier", "id", "spectrum", "spectrum_id", "sample")


def _sniff_rows(path):
    text = open(path, encoding="utf-8-sig").read()
    dialect = csv.Sniffer().sniff(text[:4096], delimiters=",;\t ")
    return [r for r in csv.reader(text.splitlines(), dialect) if r]


def _is_number(v):
    try:
        float(v)
        return True
    except ValueError:
        return False


def _norm(s):
    return re.sub(r"[^a-z0-9]", "", s.lower())


def species_lookup():
    text = resources.files("taxosvm.data").joinpath("micromass_species.csv").read_text("utf-8")
    table = {}
    for r in csv.DictReader(text.splitlines()):
        table[_norm(r["species_code"])] = r["species_code"]
        table[_norm(r["species_name"])] = r["species_code"]
    return table


def _pick(header, forced, guesses, what):
    low = [h.strip().lower() for h in header]
    if forced:
        if forced.lower() not in low:
            sys.exit(f"metadata has no column {forced!r}; columns: {header}")
        return low.index(forced.lower())
    for g in guesses:
        if g in low:
            return low.index(g)
    sys.exit(f"cannot tell which metadata column holds the {what}; columns: {header} (use --{what}-col)")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--matrix", required=True)
    ap.add_argument("--metadata", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--strain-col")
    ap.add_argument("--species-col")
    ap.add_argument("--id-col")
    args = ap.parse_args(argv)

    rows = _sniff_rows(args.matrix)
    if not all(_is_number(v) for v in rows[0]):
        rows = rows[1:]  # header line
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        sys.exit("ragged peak matrix")

    meta = _sniff_rows(args.metadata)
    header, meta = meta[0], meta[1:]
    if len(meta) != len(rows):
        sys.exit(f"{len(rows)} spectra but {len(meta)} metadata rows")
    si = _pick(header, args.strain_col, STRAIN_GUESSES, "strain")
    ki = _pick(header, args.species_col, SPECIES_GUESSES, "species")
    low = [h.strip().lower() for h in header]
    ii = low.index(args.id_col.lower()) if args.id_col else next((low.index(g) for g in ID_GUESSES if g in low), None)

    lookup = species_lookup()
    unknown = sorted({m[ki] for m in meta if _norm(m[ki]) not in lookup})
    if unknown:
        sys.exit(f"species not in the shipped table: {unknown}")

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["spectrum_id", "strain_id", "species_code"] + [f"f{j + 1:04d}" for j in range(width)])
        for n, (m, r) in enumerate(zip(meta, rows)):
            sid = m[ii] if ii is not None else f"s{n + 1:04d}"
            w.writerow([sid, m[si].strip(), lookup[_norm(m[ki])]] + r)
    print(f"wrote {len(rows)} spectra with {width} features to {args.out}")


if __name__ == "__main__":
    main()
