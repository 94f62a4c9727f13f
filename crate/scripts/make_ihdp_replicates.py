#!/usr/bin/env python3
"""Regenerate IHDP semi-synthetic replicates (response surface "B", Hill 2011).

Reads the raw IHDP covariate table (985 children; shipped as
``econml/data/ihdp/sim.csv`` in the econml wheel), drops treated children with
non-white mothers (leaving 747 subjects), and writes one CSV per replicate in
the usual NPCI layout, without a header:

    t, y_factual, y_cfactual, mu0, mu1, x1..x25

Continuous covariates (the first six) are standardized; the remaining 19 are
binary.  The response surface includes an intercept column, and the
0.5 offset applies to every column.  Replicate ``i`` is drawn with ``numpy.random.RandomState(i)``.

Usage:
    python3 scripts/make_ihdp_replicates.py --raw sim.csv --out data/ihdp --files 1-10
    python3 scripts/make_ihdp_replicates.py --from-wheel econml-*.whl --out data/ihdp
"""
import argparse
import io
import os
import zipfile

import numpy as np
import pandas as pd

CONTINUOUS = ["bw", "b.head", "preterm", "birth.o", "nnhealth", "momage"]
BINARY = [
    "sex", "twin", "b.marr", "mom.lths", "mom.hs", "mom.scoll", "cig", "first",
    "booze", "drugs", "work.dur", "prenatal",
    "site1", "site2", "site3", "site4", "site5", "site6", "site7",
]


def load_raw(args):
    if args.raw:
        return pd.read_csv(args.raw)
    with zipfile.ZipFile(args.from_wheel) as z:
        return pd.read_csv(io.BytesIO(z.read("econml/data/ihdp/sim.csv")))


def covariates(raw):
    keep = ~((raw["treat"] == 1) & (raw["momwhite"] == 0))
    d = raw[keep].reset_index(drop=True)
    cont = d[CONTINUOUS].to_numpy(dtype=float)
    cont = (cont - cont.mean(axis=0)) / cont.std(axis=0)
    x = np.hstack([cont, d[BINARY].to_numpy(dtype=float)])
    return d["treat"].to_numpy(dtype=int), x


def replicate(t, x, seed):
    rs = np.random.RandomState(seed)
    design = np.hstack([np.ones((x.shape[0], 1)), x])
    beta = rs.choice([0.0, 0.1, 0.2, 0.3, 0.4], size=design.shape[1], p=[0.6, 0.1, 0.1, 0.1, 0.1])
    mu0 = np.exp((design + 0.5) @ beta)
    mu1 = design @ beta
    omega = np.mean(mu1[t == 1] - mu0[t == 1]) - 4.0
    mu1 = mu1 - omega
    y0 = mu0 + rs.normal(size=len(t))
    y1 = mu1 + rs.normal(size=len(t))
    yf = np.where(t == 1, y1, y0)
    ycf = np.where(t == 1, y0, y1)
    return np.column_stack([t, yf, ycf, mu0, mu1, x])


def parse_range(s):
    lo, _, hi = s.partition("-")
    return range(int(lo), int(hi or lo) + 1)


def main():
    p = argparse.ArgumentParser()
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--raw")
    src.add_argument("--from-wheel")
    p.add_argument("--out", required=True)
    p.add_argument("--files", default="1-10")
    args = p.parse_args()

    t, x = covariates(load_raw(args))
    os.makedirs(args.out, exist_ok=True)
    for i in parse_range(args.files):
        rows = replicate(t, x, i)
        path = os.path.join(args.out, f"ihdp_npci_{i}.csv")
        with open(path, "w") as f:
            for r in rows:
                f.write(",".join([str(int(r[0]))] + [repr(float(v)) for v in r[1:]]) + "\n")
        print(f"{path}: {rows.shape[0]} subjects, true ATE {np.mean(rows[:, 4] - rows[:, 3]):.4f}")


if __name__ == "__main__":
    main()
