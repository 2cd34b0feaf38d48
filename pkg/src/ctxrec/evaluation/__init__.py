"""Ranking metrics, significance testing and critical-difference ranking."""

from .metrics import (METRIC_FUNCS, METRICS, MetricResult, evaluate_lists, ndcg_at_k,
                      precision_at_k, recall_at_k)
from .stats import (CdRanking, SignificanceReport, average_ranks, cd_report_text, holm,
                    paired_ttest, shapiro_diagnostic, wilcoxon_holm_cd)
from .svg import cd_diagram_svg, line_chart_svg

__all__ = ["METRIC_FUNCS", "METRICS", "MetricResult", "evaluate_lists", "ndcg_at_k",
           "precision_at_k", "recall_at_k", "CdRanking", "SignificanceReport", "average_ranks",
           "cd_report_text", "holm", "paired_ttest", "shapiro_diagnostic", "wilcoxon_holm_cd",
           "cd_diagram_svg", "line_chart_svg"]
