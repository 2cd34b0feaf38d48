"""
Recommending POIs for one user
==============================

Generate a small synthetic city, split each user's check-ins in time, fit a
Poisson factor model and a geographical KDE, and fuse the two scores into a
top-10 list.
"""

import numpy as np

from ctxrec.data import build_frequency_matrix, dataset_statistics, format_statistics, temporal_split
from ctxrec.fusion import FusionConfig, fuse, recommend_top_n
from ctxrec.models import PfmParams, train_pfm
from ctxrec.scorers import fit_geo_kde
from ctxrec.synthetic import SyntheticConfig, generate_synthetic

d = generate_synthetic(SyntheticConfig(n_users=100, n_pois=400, n_checkins=6000), seed=1)
print(format_statistics({"synthetic": dataset_statistics(d)}))

# earliest 70% of each user's check-ins train, next 20% test
split = temporal_split(d)
R = build_frequency_matrix(split.train)

mf = train_pfm(R, PfmParams(K=10, iterations=100), seed=0)
kde = fit_geo_kde(R, split.train)
print(f"PFM log-posterior: {mf.trace[0]:.1f} -> {mf.trace[-1]:.1f}")

u = 3
visited = np.unique(split.train.user_pois(u))
candidates = np.setdiff1d(np.arange(d.n_pois), visited)
score = fuse(mf.scores(u, candidates), {"G": kde.scores(u, candidates)}, FusionConfig("M", ("G",)))
top = recommend_top_n(u, candidates, score, 10, visited).pois
print(f"user {d.user_ids[u]}: {[d.poi_ids[i] for i in top]}")

# hits@10 summed over every user, with and without the geographical context
for cfg in (FusionConfig("M", ()), FusionConfig("M", ("G",))):
    hits = 0
    for u in range(d.n_users):
        visited = np.unique(split.train.user_pois(u))
        candidates = np.setdiff1d(np.arange(d.n_pois), visited)
        ctx = {"G": kde.scores(u, candidates)} if cfg.contexts else {}
        rec = recommend_top_n(u, candidates, fuse(mf.scores(u, candidates), ctx, cfg), 10, visited)
        hits += len(np.intersect1d(rec.pois, split.test.user_pois(u)))
    print(f"{cfg.label:6s} hits@10 over {d.n_users} users: {hits}")
