"""A small version of the random-graph simulation study.

For each family, test and sample size: average Jaccard similarity of the ICP
output to the true parents (power) and the fraction of outputs containing a
non-parent (family-wise error, should stay near or below 5%).

Usage: python3 07_scenario_study.py [ndags] [reps]
"""

import itertools
import sys

import numpy as np

from tramicp.cli import simulate_rows

ndags = int(sys.argv[1]) if len(sys.argv) > 1 else 5
reps = int(sys.argv[2]) if len(sys.argv) > 2 else 2
families, tests, sizes = ("binary", "cotram", "weibull"), ("gcm", "wald"), (100, 300, 1000)
rows = simulate_rows(families, tests, sizes, ndags, reps, seed=2024)

print(f"{ndags} graphs x {reps} reps per cell")
print("family   test      n   jaccard   fwer")
for f, t, n in itertools.product(families, tests, sizes):
    sel = [r for r in rows if r[:3] == (f, t, n)]
    print(f"{f:8s} {t:4s} {n:6d}   {np.mean([r[5] for r in sel]):7.3f}   {np.mean([r[6] for r in sel]):.3f}")
