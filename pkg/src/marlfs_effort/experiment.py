"""End-to-end experiment: preprocessing, every comparison method, and the report files."""
from __future__ import annotations

import csv
import json
import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, baselines, dataset, reward
from .config import RunConfig
from .dataset import DataTable, ScalerParams
from .marlfs import run_marlfs

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it (a method name or 'preprocess')."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class Prepared:
    table: DataTable
    train_raw: DataTable
    val_raw: DataTable
    train: DataTable
    val: DataTable
    scaler: ScalerParams
    report: dict


def preprocess(cfg: RunConfig) -> tuple[DataTable, dict]:
    """Load, clean, drop sparse columns/rows, impute, and split off the label."""
    raw = cfg.raw
    path = cfg.input_path
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    t = dataset.load_raw(path, raw["delimiter"])
    n_rows_in, n_cols_in = t.n_rows, t.n_cols
    t = dataset.clean_sentinels(t, raw["sentinels"])
    t, dropped = dataset.drop_sparse(t, raw["col_drop_ratio"], raw["row_drop_ratio"])
    numeric, fill_log = dataset.impute(t, cfg.imputation_plan())
    table = dataset.select_label_and_features(numeric, raw["label"], raw["exclude"], raw["expert_column"])
    assert not np.isnan(table.X).any()
    report = {
        "input": {"path": str(path), "rows": n_rows_in, "columns": n_cols_in},
        "dropped_columns": dropped.columns,
        "dropped_column_missing": dropped.column_missing,
        "dropped_rows": dropped.rows,
        "imputation": fill_log,
        "rows": table.n_rows,
        "label": table.label_name,
        "expert_estimate": table.expert_estimate is not None,
        "n_features": table.n_features,
        "features": table.feature_names,
    }
    return table, report


def prepare(cfg: RunConfig) -> Prepared:
    """``preprocess`` then split, drop train-constant features, and standardize."""
    table, report = preprocess(cfg)
    train_raw, val_raw = dataset.split(table, cfg.raw["split"]["train_fraction"], cfg.raw["split"]["seed"])
    train_raw, constant = dataset.drop_constant(train_raw)
    if constant:
        log.info("dropping features constant on the training split: %s", constant)
        keep = [table.feature_names.index(n) for n in train_raw.feature_names]
        val_raw = val_raw.take_features(keep)
    train, val, scaler = dataset.standardize(train_raw, val_raw)
    report = dict(report)
    report["split"] = {"train_rows": train.n_rows, "val_rows": val.n_rows,
                       "seed": cfg.raw["split"]["seed"],
                       "train_row_ids": [int(i) for i in train.row_ids],
                       "val_row_ids": [int(i) for i in val.row_ids]}
    report["constant_on_train"] = constant
    report["scaler"] = {"std_convention": "population", "params": scaler.to_dict()}
    return Prepared(table, train_raw, val_raw, train, val, scaler, report)


@dataclass
class ExperimentReport:
    metrics: dict[str, dict[str, float]] = field(default_factory=dict)
    subsets: dict[str, list[str]] = field(default_factory=dict)
    spearman: list[tuple[str, float]] = field(default_factory=list)
    rfe_ranking: list[tuple[str, int, int]] = field(default_factory=list)
    filter_probe: Optional[baselines.OverfitProbe] = None
    marlfs: Optional[object] = None
    fingerprint: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "fingerprint": self.fingerprint,
            "metrics": {m: {"MSE": v["MSE"], "MAE": v["MAE"]} for m, v in self.metrics.items()},
            "subsets": self.subsets,
            "spearman_top": [{"feature": n, "abs_rho": r} for n, r in self.spearman],
        }
        if self.filter_probe is not None:
            out["filter_probe"] = self.filter_probe._asdict()
        if self.marlfs is not None:
            r = self.marlfs
            out["marlfs"] = {"best_cv_mse": r.best_cv_mse, "fold_seed": r.fold_seed,
                             "n_selected": r.best_subset.cardinality,
                             "evaluated_subsets": r.evaluations}
        return out


def _fingerprint(cfg: RunConfig) -> dict:
    return {
        "config_sha256": cfg.digest(),
        "seeds": {"split": cfg.raw["split"]["seed"], "forest": cfg.raw["forest"]["seed"],
                  "marlfs": cfg.raw["marlfs"]["seed"], "cv": cfg.marlfs_config().fold_seed},
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python": platform.python_version(),
    }


def run_experiment(cfg: RunConfig, prepared: Optional[Prepared] = None) -> ExperimentReport:
    p = prepare(cfg) if prepared is None else prepared
    methods = cfg.method_names()
    fp = cfg.forest_params()
    rep = ExperimentReport(fingerprint=_fingerprint(cfg))
    rep.spearman = dataset.spearman_top_k(p.table, min(cfg.raw["spearman_top_k"], p.table.n_features))
    names = p.train.feature_names

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise StageError(name, exc) from exc

    if "MARLFS" in methods:
        log.info("running MARLFS on %d features", p.train.n_features)
        res = stage("MARLFS", lambda: run_marlfs(p.train, p.val, cfg.marlfs_config()))
        rep.marlfs = res
        rep.metrics["MARLFS"] = {"MSE": res.val_mse, "MAE": res.val_mae}
        rep.subsets["MARLFS"] = res.selected_names
    if "Expert" in methods:
        mse, mae = stage("Expert", lambda: baselines.expert_metrics(p.val))
        rep.metrics["Expert"] = {"MSE": mse, "MAE": mae}
    if "raw-RF" in methods:
        mse, mae = stage("raw-RF", lambda: baselines.evaluate_subset(p.train, p.val, None, fp))
        rep.metrics["raw-RF"] = {"MSE": mse, "MAE": mae}
        rep.subsets["raw-RF"] = list(names)
    if "Filter" in methods:
        def _filter():
            sub = baselines.variance_filter(p.train_raw.X, cfg.raw["baselines"]["filter_threshold"])
            return sub, baselines.filter_overfit_probe(p.train, p.val, sub, fp)
        sub, probe = stage("Filter", _filter)
        rep.filter_probe = probe
        rep.metrics["Filter"] = {"MSE": probe.val_mse, "MAE": probe.val_mae}
        rep.subsets["Filter"] = [names[i] for i in sub.indices]
    wrappers = [m for m in methods if m.startswith("Wrapper-")]
    if wrappers:
        ks = [int(m.split("-")[1]) for m in wrappers]
        path = stage("Wrapper", lambda: baselines.rfe_path(p.train, ks, cfg.raw["baselines"]["rfe_step"], fp))
        for m, k in zip(wrappers, ks):
            res = path[k]
            mse, mae = stage(m, lambda: baselines.evaluate_subset(p.train, p.val, res.selected, fp))
            rep.metrics[m] = {"MSE": mse, "MAE": mae}
            rep.subsets[m] = res.selected_names
        deepest = path[min(ks)]
        ranks = deepest.ranks()
        rep.rfe_ranking = [(n, ranks[n], rnd) for n, rnd in deepest.ranking]
    # canonical method order
    rep.metrics = {m: rep.metrics[m] for m in methods if m in rep.metrics}
    return rep


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def write_preprocess_outputs(out_dir: Path, table: DataTable, report: dict, top_k: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / "cleaned.csv")
    write_json(out_dir / "preprocess_report.json", report)
    ranking = dataset.spearman_top_k(table, table.n_features)
    _write_csv(out_dir / "spearman.csv", ["rank", "feature", "abs_rho", "top_k"],
               [[i + 1, n, _fmt(r), int(i < top_k)] for i, (n, r) in enumerate(ranking)])


def feature_comparison_rows(selected: list[str], top: list[str]) -> list[list]:
    """Selected features in order (paired with the same name when it is also a
    top-ranked feature), followed by the top-ranked features that were not selected."""
    topset = set(top)
    rows = [[n, n if n in topset else "-"] for n in selected]
    chosen = set(selected)
    rows += [["-", n] for n in top if n not in chosen]
    return [[i + 1, *r] for i, r in enumerate(rows)]


def write_run_outputs(out_dir: Path, rep: ExperimentReport, prepared: Prepared) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    methods = list(rep.metrics)
    _write_csv(out_dir / "metrics.csv", ["metric", *methods],
               [[k, *(_fmt(rep.metrics[m][k]) for m in methods)] for k in ("MSE", "MAE")])
    if rep.filter_probe is not None:
        fp = rep.filter_probe
        _write_csv(out_dir / "filter_probe.csv", ["metric", "Filter", "Filter-train"],
                   [["MSE", _fmt(fp.val_mse), _fmt(fp.train_mse)],
                    ["MAE", _fmt(fp.val_mae), _fmt(fp.train_mae)]])
    top = [n for n, _ in rep.spearman]
    if rep.marlfs is not None:
        r = rep.marlfs
        _write_csv(out_dir / "feature_comparison.csv", ["sequence", "MARLFS", "Spearman"],
                   feature_comparison_rows(r.selected_names, top))
        _write_csv(out_dir / "marlfs_trace.csv", ["episode", "step", "reward", "mse_cv", "subset_size"],
                   [[e, s, _fmt(rw), "" if np.isnan(m) else _fmt(m), k] for e, s, rw, m, k in r.trace_rows()])
        (out_dir / "marlfs_subset.txt").write_text("".join(n + "\n" for n in r.selected_names), encoding="utf-8")
    if rep.rfe_ranking:
        _write_csv(out_dir / "rfe_ranking.csv", ["feature", "rank", "elimination_round"],
                   [[n, rank, rnd] for n, rank, rnd in sorted(rep.rfe_ranking, key=lambda t: (t[1], t[0]))])
    write_json(out_dir / "subsets.json", rep.subsets)
    body = rep.to_dict()
    body["preprocess"] = {k: prepared.report[k] for k in
                          ("dropped_columns", "dropped_rows", "rows", "n_features", "constant_on_train")}
    body["split"] = {k: prepared.report["split"][k] for k in ("train_rows", "val_rows", "seed")}
    write_json(out_dir / "report.json", body)


def audit(out_dir: Path, cfg: RunConfig, prepared: Optional[Prepared] = None) -> dict[str, tuple[float, float]]:
    """Recompute each subset-based metric from ``subsets.json`` and the config seeds.

    Returns {method: (reported MSE, recomputed MSE)}.
    """
    p = prepare(cfg) if prepared is None else prepared
    subsets = json.loads((Path(out_dir) / "subsets.json").read_text(encoding="utf-8"))
    report = json.loads((Path(out_dir) / "report.json").read_text(encoding="utf-8"))
    fp = cfg.forest_params()
    out = {}
    for method, names in subsets.items():
        idx = [p.train.feature_names.index(n) for n in names]
        mse, _ = baselines.evaluate_subset(p.train, p.val, idx, fp)
        out[method] = (report["metrics"][method]["MSE"], mse)
    if "Expert" in report["metrics"]:
        out["Expert"] = (report["metrics"]["Expert"]["MSE"], baselines.expert_metrics(p.val)[0])
    return out


def curve_grid(x_max: float = 10.0, step: float = 0.01) -> np.ndarray:
    n = int(round(x_max / step)) + 1
    return np.round(np.arange(n) * step, 10)


def write_curves(out_dir: Path, cfg: RunConfig) -> Path:
    c = cfg.raw["curves"]
    table = reward.transform_curves(curve_grid(c["x_max"], c["step"]), c["k"])
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "curves.csv"
    reward.write_curves(path, table)
    return path
