"""
Which contexts help?
===================

Run a small model grid through the experiment pipeline and compare each
context-fused ranker with the plain factor model: mean nDCG@20, which models
a paired t-test says each one beats, and the Wilcoxon-Holm average ranks.
"""

from ctxrec.config import ExperimentConfig
from ctxrec.evaluation import cd_report_text
from ctxrec.experiment import run_seed

cfg = ExperimentConfig.from_dict({
    "synthetic": {"n_users": 200, "n_pois": 800, "n_checkins": 16000},
    "models": ["M", "M-(G)", "M-(T)", "M-(GT)", "M-(GST)", "GeoSoCa-(GSC)"],
    "metrics": ["nDCG", "Rec"], "K": [10, 20],
    "pfm": {"K": 16, "iterations": 150},
})

table = run_seed(cfg, seed=0)

print(f"{'model':16s} {'nDCG@20':>8s} {'Rec@20':>8s}  beats")
for label in table.models:
    beats = table.superscripts[("nDCG", 20)][label]
    print(f"{label:16s} {table.mean(label, 'nDCG', 20):8.4f} {table.mean(label, 'Rec', 20):8.4f}  "
          + ", ".join(beats))

print()
print(cd_report_text(table.cd))
