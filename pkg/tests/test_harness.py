import csv
import json

import numpy as np
import pytest

from ctxrec.cli import main
from ctxrec.config import SCHEMA, ConfigError, ExperimentConfig, derive_seeds
from ctxrec.experiment import ResultsTable, emit_reports, read_manifest_config, run_experiment
from ctxrec.fusion import parse_label

SMALL = {"n_users": 40, "n_pois": 150, "n_checkins": 1600}


def _cfg(tmp_path, **kw):
    doc = {"synthetic": SMALL, "models": ["M", "M-(G)", "M-(GT)"], "seeds": [0],
           "pfm": {"K": 8, "iterations": 30}, "ncf": {"epochs": 2, "hidden": [16, 8]},
           "output_dir": str(tmp_path / "out")}
    doc.update(kw)
    return doc


# ---------------------------------------------------------------- config

def test_schema_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="Additional properties"):
        ExperimentConfig.from_dict({"synthetic": {}, "models": ["M"], "colour": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"models": ["M"]})          # neither dataset nor synthetic
    with pytest.raises(ConfigError, match="K"):
        ExperimentConfig.from_dict({"synthetic": {}, "models": ["M"], "K": []})


def test_config_semantic_checks():
    with pytest.raises(ConfigError, match="sum to 1"):
        ExperimentConfig.from_dict({"synthetic": {}, "models": ["M"], "split": [0.5, 0.2, 0.2]})
    with pytest.raises(ConfigError, match="twice"):
        ExperimentConfig.from_dict({"synthetic": {}, "models": ["N-(ST)", "N-(TS)"]})
    with pytest.raises(ConfigError, match="cd_K"):
        ExperimentConfig.from_dict({"synthetic": {}, "models": ["M"], "cd_K": 5})
    with pytest.raises(ConfigError, match="unknown model"):
        ExperimentConfig.from_dict({"synthetic": {}, "models": ["Q-(G)"]})
    with pytest.raises(ConfigError, match="categorical context unavailable"):
        ExperimentConfig.from_dict({"synthetic": {"n_categories": 0}, "models": ["N-(C)"]})


def test_config_defaults_and_hash(tmp_path):
    cfg = ExperimentConfig.from_dict({"synthetic": {}, "models": ["M"]})
    assert cfg.K == [10, 20] and cfg.normalization == "minmax" and cfg.seeds == [0]
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg and again.config_hash() == cfg.config_hash()
    other = ExperimentConfig.from_dict({"synthetic": {}, "models": ["M"], "seeds": [1]})
    assert other.config_hash() != cfg.config_hash()


def test_relative_dataset_paths(tmp_path):
    p = tmp_path / "exp.json"
    p.write_text(json.dumps({"dataset": {"checkins": "c.tsv", "pois": "p.tsv"}, "models": ["M"]}))
    cfg = ExperimentConfig.load(p)
    assert cfg.dataset["checkins"] == str(tmp_path / "c.tsv")


def test_derive_seeds_fixed():
    s = derive_seeds(0)
    assert list(s) == ["synthetic", "test_negatives", "train_negatives", "pfm", "ncf"]
    assert s == derive_seeds(0) and s != derive_seeds(1)
    assert len(set(s.values())) == 5


def test_schema_is_json_serialisable():
    json.dumps(SCHEMA)


# ---------------------------------------------------------------- pipeline

def test_grid_rows_and_reports(tmp_path):
    cfg = ExperimentConfig.from_dict(_cfg(tmp_path))
    tables = run_experiment(cfg)
    assert len(tables) == 1
    t = tables[0]
    assert len(t.rows) == 3 * 3 * 2
    keys = {(r.model, r.metric, r.K) for r in t.rows}
    assert len(keys) == len(t.rows)
    labels = {r.model for r in t.rows}
    assert labels == {"M", "M-(G)", "M-(GT)"}
    assert len({parse_label(lab) for lab in labels}) == 3
    out = tmp_path / "out"
    seed_dir = out / "seed-0"
    for name in ("results.csv", "per_user.csv", "significance.csv", "cd_report.txt",
                 "cd_diagram.svg", "bucketed_report.csv", "behavior_profiles.csv"):
        assert (seed_dir / name).exists(), name
    assert (out / "manifest.json").exists()
    # every user in per_user.csv has a non-empty test set, same users for each model
    users = {}
    with open(seed_dir / "per_user.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            users.setdefault((row["metric"], row["K"]), {}).setdefault(row["model"], set()).add(row["user_id"])
    for per_model in users.values():
        assert len({frozenset(v) for v in per_model.values()}) == 1


def test_csvs_strict_rfc4180(tmp_path):
    cfg = ExperimentConfig.from_dict(_cfg(tmp_path, models=["M", "X-(G+FCF)", "GeoSoCa-(GS)"]))
    run_experiment(cfg)
    files = sorted((tmp_path / "out").glob("**/*.csv"))
    assert len(files) >= 6
    for f in files:
        raw = f.read_bytes()
        assert raw.endswith(b"\n")
        with open(f, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh, strict=True))
        assert len({len(r) for r in rows}) == 1, f.name


def test_results_csv_byte_identical(tmp_path, monkeypatch):
    doc = _cfg(tmp_path, models=["M", "N-(ST)", "M-(GT)"])
    cfg = ExperimentConfig.from_dict(doc)
    run_experiment(cfg, tmp_path / "a")
    monkeypatch.setenv("CTXREC_THREADS", "3")
    run_experiment(cfg, tmp_path / "b")
    for name in ("results.csv", "per_user.csv", "significance.csv", "cd_report.txt",
                 "bucketed_report.csv", "cd_diagram.svg"):
        assert (tmp_path / "a/seed-0" / name).read_bytes() == (tmp_path / "b/seed-0" / name).read_bytes()


def test_manifest_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_dict(_cfg(tmp_path, seeds=[2, 3]))
    run_experiment(cfg)
    man = tmp_path / "out" / "manifest.json"
    assert read_manifest_config(man) == cfg
    doc = json.loads(man.read_text())
    assert doc["config_hash"] == cfg.config_hash()
    assert doc["seeds"]["2"] == derive_seeds(2)
    assert set(doc["wall_times"]) == {"2", "3"}
    assert (tmp_path / "out/seed-3/results.csv").exists()


def test_category_fail_fast_before_training(tmp_path, monkeypatch):
    import ctxrec.experiment as ex
    called = []
    monkeypatch.setattr(ex, "train_pfm", lambda *a, **k: called.append(1))
    cfg = ExperimentConfig.from_dict(_cfg(tmp_path, models=["M"]))
    cfg.models = ["N-(C)"]
    cfg.synthetic = dict(SMALL, n_categories=0)
    with pytest.raises(ConfigError, match="categorical context unavailable"):
        ex.run_seed(cfg, 0)
    assert not called


def test_emit_reports_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_reports(ResultsTable(0, [], {}, [], {}), tmp_path)
    with pytest.raises(ValueError):
        emit_reports(None, tmp_path)


def test_emit_reports_unwritable(tmp_path):
    cfg = ExperimentConfig.from_dict(_cfg(tmp_path, models=["M", "M-(G)"]))
    t = run_experiment(cfg)[0]
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_reports(t, blocker / "sub")


# ---------------------------------------------------------------- CLI

def _write_cfg(tmp_path, doc):
    p = tmp_path / "exp.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", "--config", _write_cfg(tmp_path, _cfg(tmp_path))]) == 0
    assert "ok:" in capsys.readouterr().out
    bad = _cfg(tmp_path, models=["M-(Z)"])
    assert main(["validate", "--config", _write_cfg(tmp_path, bad)]) == 1
    (tmp_path / "broken.json").write_text("{")
    assert main(["validate", "--config", str(tmp_path / "broken.json")]) == 1


def test_cli_category_less_files(tmp_path, capsys):
    (tmp_path / "c.tsv").write_text("u\tA\t1\n")
    (tmp_path / "p.tsv").write_text("A\t0.0\t0.0\n")
    doc = {"dataset": {"checkins": "c.tsv", "pois": "p.tsv"}, "models": ["M", "N-(C)"]}
    assert main(["validate", "--config", _write_cfg(tmp_path, doc)]) == 1
    assert "categorical context unavailable" in capsys.readouterr().err
    doc["dataset"]["pois"] = "missing.tsv"
    assert main(["validate", "--config", _write_cfg(tmp_path, doc)]) == 1


def test_cli_synth_run_report(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, _cfg(tmp_path, models=["M", "M-(T)"], K=[5], cd_K=5))
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "data")]) == 0
    assert (tmp_path / "data" / "checkins.tsv").exists()
    # run on the written files
    doc = _cfg(tmp_path, models=["M", "M-(T)"], K=[5], cd_K=5)
    del doc["synthetic"]
    doc["dataset"] = {k: str(tmp_path / "data" / f"{k}.tsv") for k in ("checkins", "pois", "social", "categories")}
    capsys.readouterr()
    assert main(["run", "--config", _write_cfg(tmp_path, doc)]) == 0
    out = capsys.readouterr().out
    assert "nDCG@5" in out and "M-(T)" in out
    assert main(["report", "--in", str(tmp_path / "out")]) == 0
    assert main(["report", "--in", str(tmp_path / "nowhere")]) == 1


def test_cli_runtime_failure(tmp_path, capsys):
    doc = _cfg(tmp_path, models=["M"], pfm={"K": 2, "iterations": 2, "sigma": -1e308})
    assert main(["run", "--config", _write_cfg(tmp_path, doc)]) == 2
    assert "error" in capsys.readouterr().err
