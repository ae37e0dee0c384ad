#!/usr/bin/env python3
"""Exhaustive grid-search minima of the four distance objectives for TLE.

Evaluates LS, WLS, CvM and AD on a 400 x 400 grid of (alpha, lambda) over
[0.1, 10]^2 for the sample in FILE (one value per line) and writes the
minimum of each objective as JSON. Independent of the Rust code: the cdf and
objectives are written out from their textbook definitions.

usage: grid_oracle.py FILE > OUT.json
"""

import json
import sys

import numpy as np

GRID = 400
LO, HI = 0.1, 10.0


def load(path):
    xs = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                xs.append(float(line))
    return np.sort(np.array(xs))


def objectives(x, alpha, lam):
    """Objective values with alpha, lam broadcast over a grid."""
    n = x.size
    i = np.arange(1, n + 1, dtype=float)
    # shape (grid, grid, n)
    g = 1.0 - np.exp(-lam[..., None] * x)
    F = (g * (2.0 - g)) ** alpha[..., None]
    ls = np.sum((F - i / (n + 1)) ** 2, axis=-1)
    w = (n + 1) ** 2 * (n + 2) / (i * (n - i + 1))
    wls = np.sum(w * (F - i / (n + 1)) ** 2, axis=-1)
    cvm = 1.0 / (12 * n) + np.sum((F - (2 * i - 1) / (2 * n)) ** 2, axis=-1)
    tiny = np.finfo(float).tiny
    lnF = np.log(np.maximum(F, tiny))
    lnS = np.log(np.maximum(1.0 - F, tiny))
    ad = -n - np.sum((2 * i - 1) * (lnF + lnS[..., ::-1]), axis=-1) / n
    return {"ls": ls, "wls": wls, "cvm": cvm, "ad": ad}


def main():
    x = load(sys.argv[1])
    axis = np.linspace(LO, HI, GRID)
    alpha, lam = np.meshgrid(axis, axis, indexing="ij")
    out = {"grid": GRID, "lower": LO, "upper": HI, "n": int(x.size), "minima": {}}
    for name, v in objectives(x, alpha, lam).items():
        k = np.unravel_index(np.argmin(v), v.shape)
        out["minima"][name] = {
            "value": float(v[k]),
            "alpha": float(alpha[k]),
            "lambda": float(lam[k]),
        }
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
