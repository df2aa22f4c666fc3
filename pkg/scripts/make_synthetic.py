#!/usr/bin/env python3
"""Write a synthetic MicroMass-shaped dataset (571 spectra, 213 strains, 20 species) as canonical CSV.

The peaks follow the shipped taxonomy, so the file exercises the whole
benchmark without the real matrix:

    python scripts/make_synthetic.py synthetic.csv --seed 0
    taxosvm bench --dataset synthetic.csv --smoke --out results-synthetic
"""

import argparse

from taxosvm.spectra import write_dataset
from taxosvm.synthetic import micromass_like


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--p", type=int, default=1300)
    args = ap.parse_args(argv)
    d = micromass_like(seed=args.seed, p=args.p)
    write_dataset(d, args.out)
    print(f"wrote {d.n} spectra, {len(d.strains())} strains, {d.K} species to {args.out}")


if __name__ == "__main__":
    main()
