"""Loading covariate/response tables and assembling empirical datasets.

Covariate CSV: ``id,<feature1>,<feature2>,...``; response CSV:
``id,<perturbation1>,...``. A saved dataset bundle is a directory holding
``X.csv``, ``Y.csv`` (``id,Y0,Y1``) and ``meta.json``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dgp import FeaturePartition, PotentialDataset

log = logging.getLogger(__name__)


@dataclass
class NamedTable:
    row_ids: tuple[str, ...]
    col_names: tuple[str, ...]
    values: np.ndarray
    dropped_rows: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.row_ids = tuple(self.row_ids)
        self.col_names = tuple(self.col_names)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.row_ids), len(self.col_names)):
            raise ValueError("table values do not match row/column labels")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise ValueError("duplicate row ids")
        if len(set(self.col_names)) != len(self.col_names):
            raise ValueError("duplicate column names")

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.col_names.index(name)]
        except ValueError:
            raise KeyError(f"column {name!r} not found") from None

    def rows(self, ids) -> np.ndarray:
        pos = {r: i for i, r in enumerate(self.row_ids)}
        return self.values[[pos[r] for r in ids]]


def _parse(cell: str) -> float:
    x = float(cell)
    if not math.isfinite(x):
        raise ValueError(cell)
    return x


def load_csv(path) -> NamedTable:
    """Read a table whose first column holds unit ids.

    Rows with any missing or non-numeric cell are dropped; their ids are kept
    in ``dropped_rows``.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            body = [row for row in reader if row]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if not header or len(header) < 2:
        raise ValueError(f"{path}: empty table or missing header")
    cols = tuple(h.strip() for h in header[1:])
    ids, vals, dropped, seen = [], [], [], set()
    for row in body:
        rid = row[0].strip()
        if rid in seen:
            raise ValueError(f"{path}: duplicate row id {rid!r}")
        seen.add(rid)
        try:
            if len(row) != len(header):
                raise ValueError("ragged row")
            parsed = [_parse(c) for c in row[1:]]
        except ValueError:
            dropped.append(rid)
            continue
        ids.append(rid)
        vals.append(parsed)
    if not ids:
        raise ValueError(f"{path}: no complete rows")
    if dropped:
        log.warning("%s: dropped %d incomplete row(s)", path, len(dropped))
    return NamedTable(tuple(ids), cols, np.array(vals, dtype=float), tuple(dropped))


def write_csv(path, row_ids, col_names, values) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *col_names])
        for rid, row in zip(row_ids, np.asarray(values, dtype=float)):
            w.writerow([rid, *(repr(float(v)) for v in row)])


def abs_correlations(X: np.ndarray, target: np.ndarray) -> np.ndarray:
    """|Pearson r| of every column with ``target``; constant columns score 0."""
    X = np.asarray(X, dtype=float)
    t = np.asarray(target, dtype=float)
    tc = t - t.mean()
    tn = np.sqrt(tc @ tc)
    if tn <= 0:
        raise ValueError("correlation target is constant")
    Xc = X - X.mean(axis=0)
    norms = np.sqrt((Xc * Xc).sum(axis=0))
    r = np.zeros(X.shape[1])
    ok = norms > 0
    r[ok] = np.abs(Xc[:, ok].T @ tc) / (norms[ok] * tn)
    return np.minimum(r, 1.0)


def select_top_correlated(X, target, k: int) -> list[int]:
    values = X.values if isinstance(X, NamedTable) else np.asarray(X, dtype=float)
    if len(target) != values.shape[0]:
        raise ValueError("target length must equal the number of rows")
    if not 1 <= k <= values.shape[1]:
        raise ValueError(f"k={k} outside 1..{values.shape[1]}")
    r = abs_correlations(values, target)
    # stable sort on -r keeps lower column indices first among ties
    order = np.argsort(-r, kind="stable")
    return [int(i) for i in order[:k]]


def build_empirical_dataset(cov: NamedTable, resp: NamedTable, arm0: str, arm1: str,
                            k: int = 200, standardize_arms: bool = False,
                            name: str = "empirical") -> PotentialDataset:
    """Pair covariates with two measured response columns per unit.

    Units are the ids present in both tables; covariates are the ``k`` columns
    most correlated with the mean of the two arm responses.
    """
    for arm in (arm0, arm1):
        if arm not in resp.col_names:
            raise KeyError(f"response column {arm!r} not found")
    resp_ids = set(resp.row_ids)
    ids = [r for r in cov.row_ids if r in resp_ids]
    if not ids:
        raise ValueError("covariate and response tables share no unit ids")
    if k > len(cov.col_names):
        raise ValueError(f"k={k} exceeds the {len(cov.col_names)} available covariates")
    X_all = cov.rows(ids)
    r = resp.rows(ids)
    y0 = r[:, resp.col_names.index(arm0)]
    y1 = r[:, resp.col_names.index(arm1)]
    if standardize_arms:
        y0 = (y0 - y0.mean()) / y0.std()
        y1 = (y1 - y1.mean()) / y1.std()
    cols = select_top_correlated(X_all, (y0 + y1) / 2.0, k)
    names = tuple(cov.col_names[j] for j in cols)
    return PotentialDataset(X_all[:, cols], y0, y1, FeaturePartition(), names, tuple(ids),
                            name=name)


def save_dataset(ds: PotentialDataset, out_dir, provenance: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "X.csv", ds.unit_ids, ds.feature_names, ds.X)
    write_csv(out / "Y.csv", ds.unit_ids, ("Y0", "Y1"), np.column_stack([ds.Y0, ds.Y1]))
    meta = {
        "name": ds.name,
        "toy_kind": ds.toy_kind,
        "partition": ds.partition.to_dict(),
        "feature_names": list(ds.feature_names),
        "provenance": provenance or {},
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def load_dataset(path) -> PotentialDataset:
    path = Path(path)
    X = load_csv(path / "X.csv")
    Y = load_csv(path / "Y.csv")
    meta = json.loads((path / "meta.json").read_text())
    if X.row_ids != Y.row_ids:
        common = set(Y.row_ids)
        ids = [r for r in X.row_ids if r in common]
        Xv, Yv = X.rows(ids), Y.rows(ids)
    else:
        ids, Xv, Yv = X.row_ids, X.values, Y.values
    return PotentialDataset(
        Xv, Yv[:, Y.col_names.index("Y0")], Yv[:, Y.col_names.index("Y1")],
        FeaturePartition.from_dict(meta.get("partition", {})),
        tuple(meta.get("feature_names") or X.col_names), tuple(ids),
        name=meta.get("name", path.name), toy_kind=meta.get("toy_kind"),
    )
