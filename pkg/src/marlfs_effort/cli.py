"""Command-line entry point: ``preprocess``, ``run``, ``curves`` and ``audit``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import experiment
from .config import ConfigError, RunConfig

log = logging.getLogger("marlfs_effort")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict({})
    if getattr(args, "input", None):
        raw = dict(cfg.raw)
        raw["input"] = str(Path(args.input).resolve())
        cfg = RunConfig.from_dict(raw)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "methods", None):
        cfg = cfg.with_methods([m.strip() for m in args.methods.split(",") if m.strip()])
    return cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    p = Path(cfg.raw["output_dir"])
    return p if p.is_absolute() else cfg.base_dir / p


def cmd_preprocess(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    table, report = experiment.preprocess(cfg)
    experiment.write_preprocess_outputs(out, table, report, cfg.raw["spearman_top_k"])
    print(f"{table.n_rows} rows, {table.n_features} features; dropped columns: "
          f"{report['dropped_columns'] or 'none'}; wrote {out}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    prepared = experiment.prepare(cfg)
    experiment.write_preprocess_outputs(out, prepared.table, prepared.report, cfg.raw["spearman_top_k"])
    rep = experiment.run_experiment(cfg, prepared)
    experiment.write_run_outputs(out, rep, prepared)
    width = max(len(m) for m in rep.metrics) if rep.metrics else 6
    print(f"{'method':<{width}}  {'MSE':>12}  {'MAE':>10}")
    for m, v in rep.metrics.items():
        print(f"{m:<{width}}  {v['MSE']:>12.4f}  {v['MAE']:>10.4f}")
    print(f"wrote {out}")
    return 0


def cmd_curves(args) -> int:
    cfg = _load_config(args)
    path = experiment.write_curves(_out_dir(args, cfg), cfg)
    print(f"wrote {path}")
    return 0


def cmd_audit(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    results = experiment.audit(out, cfg)
    ok = True
    for method, (reported, recomputed) in results.items():
        same = reported == recomputed
        ok &= same
        print(f"{method}: reported {reported!r} recomputed {recomputed!r} {'ok' if same else 'MISMATCH'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marlfs-effort", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, methods=False):
        p.add_argument("--config", help="YAML/JSON run configuration")
        p.add_argument("--input", help="override the input CSV path")
        p.add_argument("--out", help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, help="override every seed in the config")
        if methods:
            p.add_argument("--methods", help="comma-separated subset of methods to run")

    common(sub.add_parser("preprocess", help="clean the dataset and write the preprocessing report"))
    common(sub.add_parser("run", help="run every method and write the comparison tables"), methods=True)
    common(sub.add_parser("curves", help="write the reward transform curves"))
    common(sub.add_parser("audit", help="recompute reported metrics from persisted subsets"), methods=True)
    return parser


COMMANDS = {"preprocess": cmd_preprocess, "run": cmd_run, "curves": cmd_curves, "audit": cmd_audit}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except experiment.StageError as exc:
        print(f"error in {exc.stage}: {exc.cause}", file=sys.stderr)
    except (FileNotFoundError, ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
