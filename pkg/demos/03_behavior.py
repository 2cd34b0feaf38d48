"""
User behaviour and accuracy
===========================

Profile every user by travel distance, time between check-ins and how much
they explore, look at how the three aspects correlate, and split accuracy
into behaviour quintiles.
"""

import numpy as np

from ctxrec.behavior import behavior_correlations, bucketize_and_aggregate
from ctxrec.config import ExperimentConfig
from ctxrec.experiment import run_seed

cfg = ExperimentConfig.from_dict({
    "synthetic": {"n_users": 200, "n_pois": 800, "n_checkins": 16000},
    "models": ["M", "M-(G)", "M-(T)"], "metrics": ["nDCG"], "K": [20],
    "pfm": {"K": 16, "iterations": 150},
})
table = run_seed(cfg, seed=0)

for (a, b), r in behavior_correlations(table.profiles).items():
    print(f"pearson r({a}, {b}) = {r:+.3f}")

per_user = {m: (table.per_user[(m, "nDCG", 20)].users, table.per_user[(m, "nDCG", 20)].values)
            for m in table.models}
for aspect in ("geo", "temporal", "exploration"):
    rep = bucketize_and_aggregate(table.profiles, per_user, aspect)
    print(f"\n{aspect}: quintile upper edges {np.round(rep.boundaries, 2).tolist()}")
    for m, means in rep.means.items():
        print(f"  {m:6s} " + " ".join(f"{v:.3f}" for v in means))
