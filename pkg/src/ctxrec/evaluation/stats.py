"""Paired significance tests and critical-difference ranking."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class SignificanceReport:
    model_a: str
    model_b: str
    statistic: float
    p_value: float
    degenerate: bool = False
    alpha: float = 0.05

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


def paired_ttest(a, b, alpha: float = 0.05, labels=("a", "b")) -> SignificanceReport:
    """Two-tailed paired t-test on per-user values (Student t, n-1 dof)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two pairs")
    d = a - b
    sd = np.std(d, ddof=1)
    # differences constant up to rounding: t is undefined, report the limit and flag it
    if not np.isfinite(sd) or sd <= 16 * np.finfo(float).eps * np.max(np.abs(d), initial=0.0):
        m = float(np.mean(d))
        if m == 0.0:
            return SignificanceReport(labels[0], labels[1], 0.0, 1.0, True, alpha)
        return SignificanceReport(labels[0], labels[1], float(np.sign(m)) * np.inf, 0.0, True, alpha)
    t = float(np.mean(d) / (sd / np.sqrt(n)))
    p = float(2.0 * stats.t.sf(abs(t), n - 1))
    return SignificanceReport(labels[0], labels[1], t, min(p, 1.0), False, alpha)


def shapiro_diagnostic(values) -> float:
    """Shapiro-Wilk p-value of a sample, for reporting only."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 3 or np.ptp(values) == 0:
        return float("nan")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return float(stats.shapiro(values[:5000]).pvalue)


def holm(p_values, alpha: float = 0.05) -> np.ndarray:
    """Holm step-down: boolean rejection mask in the input order."""
    p = np.asarray(p_values, dtype=np.float64)
    m = len(p)
    reject = np.zeros(m, dtype=bool)
    for i, j in enumerate(np.argsort(p, kind="stable")):
        if p[j] > alpha / (m - i):
            break
        reject[j] = True
    return reject


def wilcoxon_p(a, b) -> float:
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    if np.all(d == 0):
        return 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return float(stats.wilcoxon(a, b, zero_method="wilcox").pvalue)


@dataclass(frozen=True)
class CdRanking:
    labels: tuple
    avg_ranks: np.ndarray
    pairs: tuple
    p_values: np.ndarray
    significant: np.ndarray
    cliques: tuple = field(default=())
    alpha: float = 0.05

    def rank_of(self, label: str) -> float:
        return float(self.avg_ranks[self.labels.index(label)])

    def ordered(self):
        order = np.argsort(self.avg_ranks, kind="stable")
        return [(self.labels[i], float(self.avg_ranks[i])) for i in order]


def average_ranks(values: np.ndarray) -> np.ndarray:
    """Per-row ranks (1 = highest value, ties averaged) of a users x models array."""
    return stats.rankdata(-np.asarray(values, dtype=np.float64), method="average", axis=1)


def wilcoxon_holm_cd(per_user: dict, alpha: float = 0.05) -> CdRanking:
    """Average ranks, Holm-corrected pairwise Wilcoxon tests and cliques.

    ``per_user`` maps model label -> per-user metric values over a common
    user set.  A clique is a maximal run of rank-adjacent models with no
    significant difference between any two of its members.
    """
    labels = tuple(per_user)
    if len(labels) < 2:
        raise ValueError("need at least two models")
    X = np.column_stack([np.asarray(per_user[k], dtype=np.float64) for k in labels])
    avg = average_ranks(X).mean(axis=0)
    pairs = tuple(itertools.combinations(range(len(labels)), 2))
    p = np.array([wilcoxon_p(X[:, i], X[:, j]) for i, j in pairs])
    sig = holm(p, alpha)
    differs = np.zeros((len(labels), len(labels)), dtype=bool)
    for (i, j), s in zip(pairs, sig):
        differs[i, j] = differs[j, i] = s
    order = list(np.argsort(avg, kind="stable"))
    runs = []
    for a in range(len(order)):
        b = a
        while b + 1 < len(order) and not any(differs[order[b + 1], order[k]] for k in range(a, b + 1)):
            b += 1
        if b > a:
            runs.append((a, b))
    runs = [r for r in runs if not any(o != r and o[0] <= r[0] and r[1] <= o[1] for o in runs)]
    cliques = tuple(tuple(labels[order[k]] for k in range(a, b + 1)) for a, b in runs)
    return CdRanking(labels, avg, tuple((labels[i], labels[j]) for i, j in pairs), p, sig,
                     cliques, alpha)


def cd_report_text(cd: CdRanking) -> str:
    lines = ["average ranks (lower is better):"]
    for name, r in cd.ordered():
        lines.append(f"  {r:8.4f}  {name}")
    lines.append(f"pairwise Wilcoxon signed-rank, Holm-corrected at alpha={cd.alpha}:")
    for (a, b), p, s in zip(cd.pairs, cd.p_values, cd.significant):
        lines.append(f"  {a} vs {b}: p={p:.6g} {'significant' if s else 'n.s.'}")
    lines.append("cliques (not significantly different):")
    if not cd.cliques:
        lines.append("  none")
    for c in cd.cliques:
        lines.append("  " + ", ".join(c))
    return "\n".join(lines) + "\n"
