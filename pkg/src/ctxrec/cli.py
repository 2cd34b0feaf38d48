"""Command line entry point: ``ctxrec {run,validate,synth,report}``.

Exit status is 0 on success, 1 when the configuration or input data is
invalid and 2 when a run fails for any other reason.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, derive_seeds
from .data import LoadError, dataset_statistics, format_statistics, write_dataset
from .experiment import run_experiment, summarize_dir
from .scorers import ContextUnavailable
from .synthetic import generate_synthetic

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2

log = logging.getLogger("ctxrec")


def poi_file_has_categories(path) -> bool:
    """Peek at the first POI row; a non-empty fourth column means categories."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                cols = line.rstrip("\r\n").split("\t")
                return len(cols) == 4 and cols[3] != ""
    return False


def validate(cfg: ExperimentConfig) -> None:
    """Static checks that need no training: schema, grid, file presence, categories."""
    if cfg.dataset is not None:
        for key in ("checkins", "pois", "social", "categories"):
            p = cfg.dataset.get(key)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"dataset.{key}: no such file {p}")
        has_cat = cfg.dataset.get("categories") is not None or poi_file_has_categories(cfg.dataset["pois"])
        cfg.require_categories(has_cat)
    else:
        cfg.require_categories(cfg.synthetic_config().n_categories > 0)


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    validate(cfg)
    out = args.out or cfg.output_dir
    tables = run_experiment(cfg, out)
    for t in tables:
        log.info("seed %d: %d result rows in %.1fs", t.seed, len(t.rows), t.wall_times["total"])
    print(summarize_dir(out), end="")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    validate(cfg)
    print(f"ok: {len(cfg.models)} models, {len(cfg.seeds)} seeds, hash {cfg.config_hash()[:12]}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if cfg.synthetic is None:
        raise ConfigError("config has no synthetic section")
    for seed in cfg.seeds:
        d = generate_synthetic(cfg.synthetic_config(), derive_seeds(seed)["synthetic"])
        out = Path(args.out) / f"seed-{seed}" if len(cfg.seeds) > 1 else Path(args.out)
        write_dataset(d, out)
        print(format_statistics({f"synthetic-{seed}": dataset_statistics(d)}).rstrip("\n"))
    return EXIT_OK


def _cmd_report(args) -> int:
    print(summarize_dir(args.in_dir), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctxrec", description="Context-fused POI recommendation experiments")
    p.add_argument("--version", action="version", version=f"ctxrec {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run every seed of an experiment and write reports")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="override output_dir from the config")
    r.set_defaults(func=_cmd_run)
    v = sub.add_parser("validate", help="check a config without training anything")
    v.add_argument("--config", required=True)
    v.set_defaults(func=_cmd_validate)
    s = sub.add_parser("synth", help="write the synthetic dataset described by a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_synth)
    rep = sub.add_parser("report", help="summarise a finished run directory")
    rep.add_argument("--in", dest="in_dir", required=True)
    rep.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, LoadError, ContextUnavailable) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID if args.command in ("validate", "report") else EXIT_FAILED
    except Exception as e:  # noqa: BLE001 - any other failure is a runtime failure
        log.debug("run failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
