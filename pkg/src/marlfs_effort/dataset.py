"""Loading, cleaning, imputation, splitting and scaling of effort-estimation tables."""
from __future__ import annotations

import csv
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import stats

log = logging.getLogger(__name__)

Cell = float | str | None

DEFAULT_SENTINELS = ("?", "Not exist")

# Per-column fill strategy for the SEERA attributes that survive the column
# drop; "Medium" in the source table is read as median.
SEERA_IMPUTATION = {
    "Team contracts": "mode",
    "Requirement accuracy level": "mode",
    "Process reengineering": "mean",
    "Income satisfaction": "mode",
    "Organization management structure clarity": "mode",
    "Product complexity": "mode",
    "Developer training": "mode",
    "Reliability requirements": "median",
    "Comments within the code": "median",
    "Degree of software reuse": "median",
    "Team selection": "median",
    "Object points": "median",
    "Clarity of manual system": "median",
    "Development team management": "median",
    "Developer incentives policy": "median",
    "Developer hiring policy": "median",
    "Government policy impact": "median",
    "Specified H/W": "median",
}

STRATEGIES = ("mode", "mean", "median")


class SchemaError(ValueError):
    pass


class ParseError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


def normalize_name(name: str) -> str:
    """Case- and whitespace-insensitive key for matching column names."""
    return re.sub(r"\s+", " ", name.strip()).casefold()


def _find(names: Sequence[str], wanted: str) -> Optional[int]:
    key = normalize_name(wanted)
    for i, n in enumerate(names):
        if normalize_name(n) == key:
            return i
    return None


@dataclass
class RawTable:
    column_names: list[str]
    cells: list[list[Cell]]
    # 1-based data-row numbers in the source file (header excluded)
    row_ids: list[int] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.column_names)) != len(self.column_names):
            dup = [n for n, c in Counter(self.column_names).items() if c > 1]
            raise SchemaError(f"duplicate column names: {dup}")
        for i, row in enumerate(self.cells):
            if len(row) != len(self.column_names):
                raise ParseError(f"row {i + 1} has {len(row)} cells, expected {len(self.column_names)}")
        if not self.row_ids:
            self.row_ids = list(range(1, len(self.cells) + 1))

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    @property
    def n_cols(self) -> int:
        return len(self.column_names)

    def column(self, j: int) -> list[Cell]:
        return [row[j] for row in self.cells]

    def missing_counts(self) -> list[int]:
        return [sum(row[j] is None for row in self.cells) for j in range(self.n_cols)]

    def n_missing(self) -> int:
        return sum(c is None for row in self.cells for c in row)


def _parse_cell(text: str) -> Cell:
    s = text.strip()
    if s == "":
        return None
    try:
        v = float(s)
    except ValueError:
        return s
    return v if math.isfinite(v) else s


def load_raw(path, delimiter: str = ",") -> RawTable:
    """Read a delimited file with a header row. Empty cells become missing;
    numeric text becomes float; anything else stays as text."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        width = len(header)
        cells = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(f"{path}: line {line_no} has {len(row)} cells, expected {width}")
            cells.append([_parse_cell(c) for c in row])
    return RawTable(header, cells)


def clean_sentinels(t: RawTable, sentinels: Iterable[str] = DEFAULT_SENTINELS) -> RawTable:
    marks = {s.strip() for s in sentinels}
    cells = [[None if isinstance(c, str) and c.strip() in marks else c for c in row] for row in t.cells]
    return RawTable(list(t.column_names), cells, list(t.row_ids))


@dataclass
class DropReport:
    columns: list[str]
    column_missing: dict[str, int]
    rows: list[int]

    def to_dict(self) -> dict:
        return {"columns": self.columns, "column_missing": self.column_missing, "rows": self.rows}


def drop_sparse(t: RawTable, col_ratio: float = 0.10, row_ratio: float = 0.10) -> tuple[RawTable, DropReport]:
    """Drop columns with missing fraction >= ``col_ratio``, then rows whose
    missing fraction over the remaining columns is > ``row_ratio``."""
    if not (0 < col_ratio <= 1 and 0 < row_ratio <= 1):
        raise ValueError("ratios must lie in (0, 1]")
    if t.n_rows == 0:
        raise DegenerateInputError("table has no rows")
    counts = t.missing_counts()
    keep_cols = [j for j in range(t.n_cols) if counts[j] / t.n_rows < col_ratio]
    dropped_cols = [t.column_names[j] for j in range(t.n_cols) if j not in keep_cols]
    if not keep_cols:
        raise DegenerateInputError("every column exceeds the missing-value ratio")
    names = [t.column_names[j] for j in keep_cols]
    cells, row_ids, dropped_rows = [], [], []
    for rid, row in zip(t.row_ids, t.cells):
        sub = [row[j] for j in keep_cols]
        if sum(c is None for c in sub) / len(sub) > row_ratio:
            dropped_rows.append(rid)
            continue
        cells.append(sub)
        row_ids.append(rid)
    if not cells:
        raise DegenerateInputError("every row exceeds the missing-value ratio")
    report = DropReport(
        columns=dropped_cols,
        column_missing={t.column_names[j]: counts[j] for j in range(t.n_cols) if t.column_names[j] in dropped_cols},
        rows=dropped_rows,
    )
    return RawTable(names, cells, row_ids), report


@dataclass
class ImputationPlan:
    """Fill strategy per column; columns not listed use ``fallback`` (None means: error)."""

    strategies: Mapping[str, str] = field(default_factory=dict)
    fallback: Optional[str] = None

    def __post_init__(self):
        for name, s in list(self.strategies.items()) + [("<fallback>", self.fallback)]:
            if s is not None and s not in STRATEGIES:
                raise ValueError(f"unknown imputation strategy {s!r} for {name}")
        self._lookup = {normalize_name(k): v for k, v in self.strategies.items()}

    def strategy_for(self, column: str) -> Optional[str]:
        return self._lookup.get(normalize_name(column), self.fallback)


@dataclass
class DataTable:
    feature_names: list[str]
    X: np.ndarray
    y: Optional[np.ndarray] = None
    expert_estimate: Optional[np.ndarray] = None
    row_ids: Optional[np.ndarray] = None
    label_name: Optional[str] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        if len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names length must equal X column count")
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=float)
            if self.y.shape != (self.X.shape[0],):
                raise ValueError("y length must equal X row count")
        if self.expert_estimate is not None:
            self.expert_estimate = np.asarray(self.expert_estimate, dtype=float)
        if self.row_ids is None:
            self.row_ids = np.arange(1, self.X.shape[0] + 1)
        if np.isnan(self.X).any():
            raise ValueError("DataTable may not contain missing cells")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take_rows(self, idx) -> "DataTable":
        idx = np.asarray(idx, dtype=int)
        return replace(
            self,
            X=self.X[idx],
            y=None if self.y is None else self.y[idx],
            expert_estimate=None if self.expert_estimate is None else self.expert_estimate[idx],
            row_ids=self.row_ids[idx],
        )

    def take_features(self, idx) -> "DataTable":
        idx = stats.subset_indices(idx)
        return replace(self, feature_names=[self.feature_names[i] for i in idx], X=self.X[:, idx])

    def to_csv(self, path) -> None:
        header = ["row_id", *self.feature_names]
        if self.y is not None:
            header.append(self.label_name or "label")
        if self.expert_estimate is not None:
            header.append("expert_estimate")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i in range(self.n_rows):
                row = [int(self.row_ids[i]), *(repr(float(v)) for v in self.X[i])]
                if self.y is not None:
                    row.append(repr(float(self.y[i])))
                if self.expert_estimate is not None:
                    row.append(repr(float(self.expert_estimate[i])))
                w.writerow(row)


def _fill_value(values: list[float], strategy: str) -> float:
    if strategy == "mean":
        return float(np.mean(values))
    if strategy == "median":
        return float(np.median(values))
    counts = Counter(values)
    top = max(counts.values())
    return float(min(v for v, c in counts.items() if c == top))


def impute(t: RawTable, plan: ImputationPlan) -> tuple[DataTable, list[dict]]:
    """Fill missing cells column by column; returns the table and a fill log.

    Mode ties resolve to the smallest value.
    """
    n = t.n_rows
    X = np.empty((n, t.n_cols))
    fill_log = []
    for j, name in enumerate(t.column_names):
        col = t.column(j)
        for i, c in enumerate(col):
            if isinstance(c, str):
                raise TypeError(f"non-numeric cell {c!r} in column {name!r}, row {t.row_ids[i]}")
        present = [c for c in col if c is not None]
        n_missing = n - len(present)
        if n_missing:
            strategy = plan.strategy_for(name)
            if strategy is None:
                raise SchemaError(f"column {name!r} has missing values but no imputation strategy")
            if not present:
                raise DegenerateInputError(f"column {name!r} has no observed values")
            fill = _fill_value(present, strategy)
            fill_log.append({"column": name, "missing": n_missing,
                             "percent": round(100.0 * n_missing / n, 2),
                             "strategy": strategy, "value": fill})
            col = [fill if c is None else c for c in col]
        X[:, j] = col
    return DataTable(list(t.column_names), X, row_ids=np.asarray(t.row_ids)), fill_log


def select_label_and_features(t: DataTable, label: str, exclude: Iterable[str] = (),
                              expert_column: Optional[str] = "Estimated duration") -> DataTable:
    """Split off the label (and expert estimate, if present); drop excluded columns."""
    li = _find(t.feature_names, label)
    if li is None:
        raise SchemaError(f"label column {label!r} not found")
    drop = {li}
    expert = None
    if expert_column is not None:
        ei = _find(t.feature_names, expert_column)
        if ei is not None:
            expert = t.X[:, ei].copy()
            drop.add(ei)
    for name in exclude:
        k = _find(t.feature_names, name)
        if k is None:
            log.info("excluded column %r not present", name)
        else:
            drop.add(k)
    keep = [j for j in range(t.n_features) if j not in drop]
    return DataTable(
        feature_names=[t.feature_names[j] for j in keep],
        X=t.X[:, keep],
        y=t.X[:, li].copy(),
        expert_estimate=expert,
        row_ids=t.row_ids,
        label_name=t.feature_names[li],
    )


def split(t: DataTable, train_fraction: float = 0.8, seed: int = 0) -> tuple[DataTable, DataTable]:
    """Seeded shuffle; the first floor(n * train_fraction) rows train, the rest validate."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    n = t.n_rows
    if n < 2:
        raise DegenerateInputError("need at least 2 rows to split")
    n_train = int(math.floor(n * train_fraction + 1e-9))
    if n_train == 0 or n_train == n:
        raise DegenerateInputError(f"split of {n} rows at {train_fraction} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(n)
    return t.take_rows(perm[:n_train]), t.take_rows(perm[n_train:])


@dataclass
class ScalerParams:
    feature_names: list[str]
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {name: {"mean": float(m), "std": float(s)}
                for name, m, s in zip(self.feature_names, self.mean, self.std)}


def standardize(train: DataTable, val: DataTable) -> tuple[DataTable, DataTable, ScalerParams]:
    """Z-score with train statistics (population std); the label is left untouched."""
    mean = train.X.mean(axis=0)
    std = train.X.std(axis=0)
    zero = np.flatnonzero(std == 0.0)
    if zero.size:
        raise DegenerateInputError(
            f"zero-variance training column(s): {[train.feature_names[j] for j in zero]}")
    params = ScalerParams(list(train.feature_names), mean, std)
    return (replace(train, X=(train.X - mean) / std),
            replace(val, X=(val.X - mean) / std),
            params)


def spearman_top_k(t: DataTable, k: Optional[int] = None) -> list[tuple[str, float]]:
    """Features ranked by |Spearman rho| with the label, ties broken by name."""
    if t.y is None:
        raise SchemaError("table has no label")
    k = t.n_features if k is None else k
    if k > t.n_features:
        raise ValueError(f"k={k} exceeds feature count {t.n_features}")
    scored = []
    for j, name in enumerate(t.feature_names):
        if np.ptp(t.X[:, j]) == 0:
            log.info("constant column %r: spearman rho set to 0", name)
            rho = 0.0
        else:
            rho = stats.spearman(t.X[:, j], t.y)
        scored.append((name, abs(rho)))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


def drop_constant(t: DataTable) -> tuple[DataTable, list[str]]:
    keep = np.flatnonzero(np.ptp(t.X, axis=0) > 0)
    dropped = [t.feature_names[j] for j in range(t.n_features) if j not in set(keep.tolist())]
    return t.take_features(keep), dropped
