"""End-to-end runs: load, filter, split, fit, fuse, evaluate, segment, report."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .behavior import (ASPECTS, behavior_correlations, behavior_profiles, bucketize_and_aggregate,
                       write_profiles_csv)
from .config import ConfigError, ExperimentConfig, derive_seeds
from .data import (Dataset, build_frequency_matrix, dataset_statistics, filter_dataset,
                   load_dataset, sample_negatives, temporal_split, training_samples,
                   write_index_map)
from .evaluation import (cd_diagram_svg, cd_report_text, evaluate_lists, line_chart_svg,
                         paired_ttest, shapiro_diagnostic, wilcoxon_holm_cd)
from .fusion import fuse, recommend_top_n
from .models import train_ncf, train_pfm, write_trace
from .scorers import (build_transition_graph, fit_categorical, fit_fcf, fit_geo_kde, fit_mgm,
                      fit_social)
from .synthetic import generate_synthetic

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResultRow:
    model: str
    contexts: str
    metric: str
    K: int
    mean: float
    stderr: float
    n_users: int


@dataclass
class ResultsTable:
    seed: int
    rows: list
    per_user: dict
    significance: list
    superscripts: dict
    cd: object = None
    buckets: dict = field(default_factory=dict)
    profiles: list = field(default_factory=list)
    correlations: dict = field(default_factory=dict)
    statistics: dict = field(default_factory=dict)
    normality: dict = field(default_factory=dict)
    wall_times: dict = field(default_factory=dict)
    user_ids: tuple = ()
    models: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)

    def mean(self, model: str, metric: str, K: int) -> float:
        return self.per_user[(model, metric, K)].mean

    def __len__(self) -> int:
        return len(self.rows)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CTXREC_THREADS", "1")))
    except ValueError:
        return 1


def _load(cfg: ExperimentConfig, seeds: dict) -> Dataset:
    if cfg.synthetic is not None:
        return generate_synthetic(cfg.synthetic_config(), seeds["synthetic"])
    ds = cfg.dataset
    return load_dataset(ds["checkins"], ds["pois"], ds.get("social"), ds.get("categories"))


class _Pipeline:
    """Fitted state of one seed; scores candidates for the configured grid."""

    def __init__(self, cfg: ExperimentConfig, grid, split, seeds, times):
        self.cfg, self.grid, self.split = cfg, grid, split
        train = split.train
        self.R = build_frequency_matrix(train)
        needed = {c for g in grid for c in g.contexts}
        bases = {g.base for g in grid if g.base is not None}
        self.scorers = {}
        self.traces = {}
        t0 = time.perf_counter()
        for tag in sorted(needed):
            if tag == "G":
                self.scorers[tag] = fit_geo_kde(self.R, train, "user", cfg.kde_floor)
            elif tag == "GU":
                self.scorers[tag] = fit_geo_kde(self.R, train, "universal", cfg.kde_floor)
            elif tag == "T":
                self.scorers[tag] = build_transition_graph(train, cfg.amc_alpha)
            elif tag == "S":
                self.scorers[tag] = fit_social(self.R, train.social)
            elif tag == "C":
                self.scorers[tag] = fit_categorical(self.R, train)
            elif tag == "FCF":
                self.scorers[tag] = fit_fcf(self.R, train.social)
            elif tag == "MGM":
                self.scorers[tag] = fit_mgm(self.R, train, cfg.mgm_d_max, cfg.mgm_theta)
        times["fit_scorers"] = time.perf_counter() - t0
        self.base = {}
        if bases:
            t0 = time.perf_counter()
            self.base["M"] = mf = train_pfm(self.R, cfg.pfm_params(), seeds["pfm"])
            self.traces["pfm"] = mf.trace
            times["train_pfm"] = time.perf_counter() - t0
            if "N" in bases:
                t0 = time.perf_counter()
                samples = training_samples(split, seeds["train_negatives"])
                self.base["N"] = ncf = train_ncf(samples, mf, cfg.ncf_params(), seeds["ncf"])
                self.traces["ncf"] = ncf.loss_trace
                times["train_ncf"] = time.perf_counter() - t0

    def component(self, tag: str, u: int, cand: np.ndarray) -> np.ndarray:
        if tag in ("M", "N"):
            return self.base[tag].scores(u, cand)
        if tag == "T":
            return self.scorers["T"].scores(self.split.train.user_pois(u), cand)
        return self.scorers[tag].scores(u, cand)

    def rank_user(self, u: int, cand: np.ndarray, train_pois: np.ndarray, n: int) -> dict:
        cache = {}

        def get(tag):
            if tag not in cache:
                cache[tag] = self.component(tag, u, cand)
            return cache[tag]

        out = {}
        for g in self.grid:
            base = get(g.base) if g.base is not None else None
            fused = fuse(base if base is not None else 0.0, {c: get(c) for c in g.contexts}, g)
            fused = np.broadcast_to(fused, cand.shape)
            out[g.label] = recommend_top_n(u, cand, fused, n, train_pois).pois
        return out


def run_seed(cfg: ExperimentConfig, seed: int) -> ResultsTable:
    times = {}
    t_start = time.perf_counter()
    seeds = derive_seeds(seed)
    grid = cfg.fusion_configs()
    t0 = time.perf_counter()
    d = _load(cfg, seeds)
    cfg.require_categories(d.has_categories)
    f = cfg.filter
    d = filter_dataset(d, f.get("min_user_checkins", 0), f.get("min_poi_visitors", 0),
                       f.get("fixpoint", False))
    if d.n_checkins == 0:
        raise ConfigError("no check-ins left after filtering")
    split = temporal_split(d, cfg.split)
    times["prepare"] = time.perf_counter() - t0

    pipe = _Pipeline(cfg, grid, split, seeds, times)

    t0 = time.perf_counter()
    negatives = sample_negatives(split, "test", seeds["test_negatives"], cfg.n_test_negatives)
    neg_by_user = np.split(negatives.pois, np.searchsorted(negatives.users, np.arange(1, d.n_users)))
    test_sets, tasks = {}, []
    for u in range(d.n_users):
        train_pois = np.unique(split.train.user_pois(u))
        test = np.setdiff1d(split.test.user_pois(u), train_pois)
        if len(test) == 0:
            continue
        test_sets[u] = set(test.tolist())
        cand = np.union1d(test, neg_by_user[u])
        tasks.append((u, cand, train_pois))
    n_max = max(cfg.K)
    work = lambda t: pipe.rank_user(t[0], t[1], t[2], n_max)
    threads = thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            ranked = list(ex.map(work, tasks))
    else:
        ranked = [work(t) for t in tasks]
    times["rank"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rows, per_user, normality = [], {}, {}
    for g in grid:
        lists = {t[0]: r[g.label] for t, r in zip(tasks, ranked)}
        res = evaluate_lists(g.label, lists, test_sets, cfg.metrics, cfg.K)
        for (metric, K), mr in res.items():
            per_user[(g.label, metric, K)] = mr
            rows.append(ResultRow(g.label, "+".join(g.contexts), metric, K, mr.mean, mr.stderr,
                                  len(mr.values)))
            normality[(g.label, metric, K)] = shapiro_diagnostic(mr.values)

    significance, superscripts = [], {}
    for metric in cfg.metrics:
        for K in cfg.K:
            beats = {g.label: [] for g in grid}
            for a, b in itertools.combinations([g.label for g in grid], 2):
                va, vb = per_user[(a, metric, K)].values, per_user[(b, metric, K)].values
                if len(va) < 2:
                    continue
                rep = paired_ttest(va, vb, labels=(a, b))
                significance.append((metric, K, rep))
                if rep.significant:
                    winner, loser = (a, b) if va.mean() > vb.mean() else (b, a)
                    beats[winner].append(loser)
            superscripts[(metric, K)] = beats

    cd = None
    if len(grid) >= 2 and len(test_sets) >= 1:
        cd = wilcoxon_holm_cd({g.label: per_user[(g.label, cfg.cd_metric, cfg.cd_K)].values
                               for g in grid})
    profiles = behavior_profiles(split.train, cfg.behavior_stat)
    buckets = {}
    metric_users = {g.label: (per_user[(g.label, cfg.cd_metric, cfg.cd_K)].users,
                              per_user[(g.label, cfg.cd_metric, cfg.cd_K)].values) for g in grid}
    for aspect in ASPECTS:
        try:
            buckets[aspect] = bucketize_and_aggregate(profiles, metric_users, aspect,
                                                      f"{cfg.cd_metric}@{cfg.cd_K}")
        except ValueError as e:
            log.warning("skipping %s buckets: %s", aspect, e)
    try:
        correlations = behavior_correlations(profiles)
    except ValueError:
        correlations = {}
    times["evaluate"] = time.perf_counter() - t0
    times["total"] = time.perf_counter() - t_start

    return ResultsTable(
        seed=seed, rows=rows, per_user=per_user, significance=significance,
        superscripts=superscripts, cd=cd, buckets=buckets, profiles=profiles,
        correlations=correlations, statistics=dataset_statistics(d), normality=normality,
        wall_times=times, user_ids=d.user_ids, models={g.label: g for g in grid},
        traces=pipe.traces,
    )


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> list:
    """Run every seed; writes ``<out>/seed-<s>/`` reports and a top-level manifest."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    tables = []
    for seed in cfg.seeds:
        table = run_seed(cfg, seed)
        emit_reports(table, out / f"seed-{seed}")
        tables.append(table)
    write_manifest(cfg, tables, out)
    return tables


# --------------------------------------------------------------------------- reports

def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _num(x) -> str:
    return repr(float(x))


def emit_reports(results: ResultsTable, out_dir) -> list:
    if results is None or not results.rows:
        raise ValueError("no results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def open_(name):
        written.append(out / name)
        return open(out / name, "w", newline="", encoding="utf-8")

    with open_("results.csv") as fh:
        w = _csv_writer(fh)
        w.writerow(["model", "contexts", "metric", "K", "mean", "stderr", "n_users"])
        for r in results.rows:
            w.writerow([r.model, r.contexts, r.metric, r.K, _num(r.mean), _num(r.stderr), r.n_users])
    with open_("per_user.csv") as fh:
        w = _csv_writer(fh)
        w.writerow(["model", "metric", "K", "user_id", "value"])
        for (model, metric, K), mr in results.per_user.items():
            for u, v in zip(mr.users, mr.values):
                w.writerow([model, metric, K, results.user_ids[u], _num(v)])
    with open_("significance.csv") as fh:
        w = _csv_writer(fh)
        w.writerow(["metric", "K", "model_a", "model_b", "t", "p", "significant", "degenerate"])
        for metric, K, rep in results.significance:
            w.writerow([metric, K, rep.model_a, rep.model_b, _num(rep.statistic), _num(rep.p_value),
                        int(rep.significant), int(rep.degenerate)])
    with open_("superscripts.csv") as fh:
        w = _csv_writer(fh)
        w.writerow(["metric", "K", "model", "significantly_better_than"])
        for (metric, K), beats in results.superscripts.items():
            for model, losers in beats.items():
                w.writerow([metric, K, model, ";".join(losers)])
    with open_("normality.csv") as fh:
        w = _csv_writer(fh)
        w.writerow(["model", "metric", "K", "shapiro_p"])
        for (model, metric, K), p in results.normality.items():
            w.writerow([model, metric, K, _num(p)])
    if results.cd is not None:
        with open_("cd_report.txt") as fh:
            fh.write(cd_report_text(results.cd))
        with open_("cd_diagram.svg") as fh:
            fh.write(cd_diagram_svg(results.cd))
    if results.profiles:
        path = out / "behavior_profiles.csv"
        write_profiles_csv(results.profiles, results.user_ids, path)
        written.append(path)
    if results.buckets:
        with open_("bucketed_report.csv") as fh:
            w = _csv_writer(fh)
            w.writerow(["aspect", "metric", "bucket", "upper_boundary", "n_users", "model", "mean",
                        "degenerate"])
            for aspect, rep in results.buckets.items():
                for model, means in rep.means.items():
                    for b in range(len(rep.boundaries)):
                        w.writerow([aspect, rep.metric, b + 1, _num(rep.boundaries[b]),
                                    int(rep.counts[b]), model, _num(means[b]), int(rep.degenerate)])
        for aspect, rep in results.buckets.items():
            with open_(f"bucketed_{aspect}.svg") as fh:
                fh.write(line_chart_svg([f"{b:.3g}" for b in rep.boundaries], rep.means,
                                        title=f"{rep.metric} by {aspect} behaviour", y_label=rep.metric))
    if results.correlations:
        with open_("correlations.csv") as fh:
            w = _csv_writer(fh)
            w.writerow(["aspect_a", "aspect_b", "pearson_r"])
            for (a, b), r in results.correlations.items():
                w.writerow([a, b, _num(r)])
    for name, trace in results.traces.items():
        path = out / f"{name}_trace.csv"
        write_trace(trace, path, "objective" if name == "pfm" else "loss")
        written.append(path)
    return written


def write_manifest(cfg: ExperimentConfig, tables, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seeds": {str(t.seed): derive_seeds(t.seed) for t in tables},
        "dataset_statistics": {str(t.seed): t.statistics for t in tables},
        "wall_times": {str(t.seed): t.wall_times for t in tables},
        "threads": thread_count(),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_manifest_config(path) -> ExperimentConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return ExperimentConfig.from_dict(doc["config"])


def summarize_dir(in_dir) -> str:
    """Text summary of a finished run directory (used by ``ctxrec report``)."""
    root = Path(in_dir)
    results = sorted(root.glob("**/results.csv"))
    if not results:
        raise FileNotFoundError(f"no results.csv under {root}")
    lines = []
    for res in results:
        lines.append(f"== {res.parent.relative_to(root) if res.parent != root else '.'}")
        with open(res, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        keys = sorted({(r["metric"], int(r["K"])) for r in rows})
        models = list(dict.fromkeys(r["model"] for r in rows))
        table = {(r["model"], r["metric"], int(r["K"])): float(r["mean"]) for r in rows}
        head = "model".ljust(18) + "".join(f"{m}@{k}".rjust(11) for m, k in keys)
        lines.append(head)
        for model in models:
            lines.append(model.ljust(18) + "".join(f"{table[(model, m, k)]:11.4f}" for m, k in keys))
        cd = res.parent / "cd_report.txt"
        if cd.exists():
            lines.append(cd.read_text(encoding="utf-8").rstrip())
    return "\n".join(lines) + "\n"


def write_split_index(d: Dataset, out_dir) -> None:
    write_index_map(d, Path(out_dir) / "index_map.tsv")

