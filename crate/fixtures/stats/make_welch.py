"""Writes welch_pairs.json: sample pairs with scipy's Welch t-test results."""
import json

import numpy as np
from scipy import stats

rng = np.random.default_rng(20240611)
pairs = []
for i in range(20):
    na, nb = int(rng.integers(3, 60)), int(rng.integers(3, 60))
    a = rng.normal(rng.uniform(0, 3), rng.uniform(0.2, 2), na)
    b = rng.normal(rng.uniform(0, 3), rng.uniform(0.2, 2), nb)
    if i % 5 == 0:
        # bucket-max-like data: bounded, with ties
        a = np.round(np.clip(a, 0, 5.17), 2)
        b = np.round(np.clip(b, 0, 5.17), 2)
    r = stats.ttest_ind(a, b, equal_var=False)
    pairs.append({
        "a": [float(x) for x in a],
        "b": [float(x) for x in b],
        "t": float(r.statistic),
        "dof": float(r.df),
        "p": float(r.pvalue),
    })

with open("welch_pairs.json", "w") as f:
    json.dump(pairs, f, indent=1)
    f.write("\n")
