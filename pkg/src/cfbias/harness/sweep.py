"""Cross-validated evaluation cells and the (source x beta x seed x fold x learner) sweep."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..attribution import biomarker_ranking, biomarker_scores
from ..bias import BiasReport, bias_report, interaction_information
from ..dgp import PotentialDataset
from ..learners import CATE, make_learner
from ..metrics import has, model_policy, outcome_rmses, pehe, precision_assignment
from ..numerics import rng
from ..policy import SOURCES, ObservationalDataset, PolicySpec, assign
from .config import AttributionConfig, ExperimentConfig, build_dataset

log = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "dataset", "policy_source", "beta", "seed", "fold", "learner", "pehe", "rmse_f", "rmse_cf",
    "rmse_y0_cf", "rmse_y1_cf", "prec_ass_pi", "prec_ass_model", "attr_pred", "attr_prog", "status",
)
METRIC_COLUMNS = RESULT_COLUMNS[6:-1]
BIAS_FIELDS = tuple(f.name for f in fields(BiasReport))
BIAS_COLUMNS = ("dataset", "policy_source", "beta", "seed", *BIAS_FIELDS,
                "interaction_info", "status")


@dataclass
class MetricsRow:
    dataset: str
    policy_source: str
    beta: float
    seed: int
    fold: int
    learner: str
    pehe: float | None = None
    rmse_f: float | None = None
    rmse_cf: float | None = None
    rmse_y0_cf: float | None = None
    rmse_y1_cf: float | None = None
    prec_ass_pi: float | None = None
    prec_ass_model: float | None = None
    attr_pred: float | None = None
    attr_prog: float | None = None
    status: str = "ok"

    @property
    def key(self) -> tuple:
        return (self.policy_source, self.beta, self.seed, self.fold, self.learner)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_csv(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in RESULT_COLUMNS]

    @classmethod
    def from_csv(cls, rec: dict) -> "MetricsRow":
        kw = {c: _parse_float(rec[c]) for c in METRIC_COLUMNS}
        return cls(rec["dataset"], rec["policy_source"], float(rec["beta"]), int(rec["seed"]),
                   int(rec["fold"]), rec["learner"], status=rec["status"], **kw)


@dataclass
class BiasRow:
    dataset: str
    policy_source: str
    beta: float
    seed: int
    report: BiasReport | None
    interaction_info: float | None = None
    status: str = "ok"

    @property
    def key(self) -> tuple:
        return (self.policy_source, self.beta, self.seed)

    def to_csv(self) -> list[str]:
        vals = asdict(self.report) if self.report else dict.fromkeys(BIAS_FIELDS)
        return [_fmt(v) for v in (self.dataset, self.policy_source, self.beta, self.seed,
                                  *(vals[f] for f in BIAS_FIELDS), self.interaction_info,
                                  self.status)]

    @classmethod
    def from_csv(cls, rec: dict) -> "BiasRow":
        report = None
        if rec["status"] == "ok":
            kw = {}
            for f in fields(BiasReport):
                kw[f.name] = int(rec[f.name]) if f.type in ("int", int) else float(rec[f.name])
            report = BiasReport(**kw)
        return cls(rec["dataset"], rec["policy_source"], float(rec["beta"]), int(rec["seed"]),
                   report, _parse_float(rec["interaction_info"]), rec["status"])


@dataclass
class ResultsTable:
    rows: list[MetricsRow] = field(default_factory=list)
    bias_rows: list[BiasRow] = field(default_factory=list)
    rankings: dict[tuple, list[dict]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[MetricsRow]:
        return [r for r in self.rows if not r.ok]

    def select(self, **where) -> list[MetricsRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in where.items())]

    def mean(self, metric: str, **where) -> float:
        vals = [getattr(r, metric) for r in self.select(**where)
                if r.ok and getattr(r, metric) is not None]
        return float(np.mean(vals)) if vals else math.nan

    def bias_mean(self, field_name: str, **where) -> float:
        vals = [getattr(b.report, field_name) for b in self.bias_rows
                if b.report is not None and all(getattr(b, k) == v for k, v in where.items())]
        return float(np.mean(vals)) if vals else math.nan

    def summary(self) -> list[dict]:
        groups: dict[tuple, list[MetricsRow]] = {}
        for r in self.rows:
            groups.setdefault((r.dataset, r.policy_source, r.beta, r.learner), []).append(r)
        out = []
        for (dsn, src, beta, learner), rows in groups.items():
            rec = {"dataset": dsn, "policy_source": src, "beta": beta, "learner": learner,
                   "n_ok": sum(r.ok for r in rows), "n_error": sum(not r.ok for r in rows)}
            for m in METRIC_COLUMNS:
                vals = [getattr(r, m) for r in rows if r.ok and getattr(r, m) is not None]
                rec[f"{m}_mean"] = float(np.mean(vals)) if vals else None
                rec[f"{m}_std"] = float(np.std(vals)) if vals else None
            out.append(rec)
        return out

    def bias_summary(self) -> list[dict]:
        groups: dict[tuple, list[BiasRow]] = {}
        for b in self.bias_rows:
            groups.setdefault((b.dataset, b.policy_source, b.beta), []).append(b)
        out = []
        for (dsn, src, beta), rows in groups.items():
            rec = {"dataset": dsn, "policy_source": src, "beta": beta,
                   "n_seeds": sum(b.report is not None for b in rows)}
            for f in ("b_y0", "b_y1", "b_effect", "b_joint", "b_x", "h_a", "prec_ass_pi"):
                vals = [getattr(b.report, f) for b in rows if b.report is not None]
                rec[f"{f}_mean"] = float(np.mean(vals)) if vals else None
                rec[f"{f}_std"] = float(np.std(vals)) if vals else None
            out.append(rec)
        return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Shuffle units with the seed, then cut into ``folds`` contiguous blocks."""
    if folds < 2 or folds > n:
        raise ValueError(f"cannot split {n} units into {folds} folds")
    perm = rng(seed, 40).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, folds)]


def cell_seed(seed: int, source: str, beta: float, fold: int, learner: str) -> int:
    """Learner seed for one cell, independent of the order cells are run in."""
    src = SOURCES.index(source) if source in SOURCES else zlib.crc32(source.encode())
    g = rng(seed, 50, src, int(round(beta * 1e6)), fold, zlib.crc32(learner.encode()))
    return int(g.integers(0, 2**31 - 1))


def _standardizer(X_train):
    mu = X_train.mean(axis=0)
    sd = X_train.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return lambda X: (X - mu) / sd


def _error_status(exc: BaseException) -> str:
    msg = " ".join(str(exc).split())[:200]
    return f"error: {type(exc).__name__}: {msg}" if msg else f"error: {type(exc).__name__}"


def evaluate_fold(obs: ObservationalDataset, train: np.ndarray, test: np.ndarray,
                  learner: str, fold: int, attribution: AttributionConfig | None = None,
                  net: dict | None = None) -> tuple[MetricsRow, np.ndarray | None]:
    ds = obs.base
    spec = obs.policy
    if np.intersect1d(train, test).size:
        raise AssertionError("fold hygiene violated: test units in the training set")
    row = MetricsRow(ds.name, spec.source, spec.beta, spec.seed, fold, learner)
    row.prec_ass_pi = precision_assignment(obs.A[test], ds.Y0[test], ds.Y1[test])
    attr_matrix = None
    try:
        scale = _standardizer(ds.X[train])
        X_tr, X_te = scale(ds.X[train]), scale(ds.X[test])
        fit = make_learner(learner)
        model = fit(X_tr, obs.A[train], obs.Yf[train],
                    seed=cell_seed(spec.seed, spec.source, spec.beta, fold, learner),
                    net_overrides=net)
        Y0, Y1, A = ds.Y0[test], ds.Y1[test], obs.A[test]
        if has(model, CATE):
            row.pehe = pehe(model.predict_cate(X_te), Y1 - Y0)
        for k, v in outcome_rmses(model, X_te, A, Y0, Y1).items():
            setattr(row, k, v)
        row.prec_ass_model = precision_assignment(model_policy(model, X_te), Y0, Y1)
        if attribution is not None and attribution.enabled and not ds.partition.empty:
            (row.attr_pred, row.attr_prog), attr_matrix = biomarker_scores(
                model, X_te, ds.partition, X_tr, attribution.budget,
                seed=cell_seed(spec.seed, spec.source, spec.beta, fold, learner),
                max_units=attribution.max_units, return_attributions=True)
        vals = [getattr(row, c) for c in METRIC_COLUMNS]
        if any(v is not None and not math.isfinite(v) for v in vals):
            raise FloatingPointError("non-finite metric")
    except Exception as exc:  # failed cells are recorded, never dropped
        log.warning("cell %s failed: %s", row.key, exc)
        for c in METRIC_COLUMNS:
            if c != "prec_ass_pi":
                setattr(row, c, None)
        row.status = _error_status(exc)
        attr_matrix = None
    return row, attr_matrix


def run_cell(ds: PotentialDataset, policy: PolicySpec, seed: int, fold_index: int,
             learner_name: str, folds: int = 5, attribution: AttributionConfig | None = None,
             net: dict | None = None) -> MetricsRow:
    """Assign, split, train on the factual training folds and score the held-out fold."""
    policy = replace(policy, seed=seed)
    obs = assign(ds, policy)
    parts = fold_indices(ds.n, folds, seed)
    test = parts[fold_index]
    train = np.concatenate([p for i, p in enumerate(parts) if i != fold_index])
    return evaluate_fold(obs, train, test, learner_name, fold_index, attribution, net)[0]


def compute_bias_row(obs: ObservationalDataset) -> BiasRow:
    spec = obs.policy
    try:
        report = bias_report(obs)
        ii = interaction_information(obs.A, obs.base.Y0, obs.base.Y1)
        return BiasRow(obs.base.name, spec.source, spec.beta, spec.seed, report, ii)
    except Exception as exc:
        return BiasRow(obs.base.name, spec.source, spec.beta, spec.seed, None,
                       status=_error_status(exc))


def run_group(ds: PotentialDataset, cfg: ExperimentConfig, source: str, beta: float, seed: int):
    """Every fold x learner cell for one (source, beta, seed), plus its bias row."""
    spec = PolicySpec(source, beta, seed, cfg.m)
    rows: list[MetricsRow] = []
    attrs: dict[str, list[np.ndarray]] = {}
    try:
        obs = assign(ds, spec)
    except Exception as exc:
        status = _error_status(exc)
        bias = BiasRow(ds.name, source, beta, seed, None, status=status)
        for fold in range(cfg.folds):
            for learner in cfg.learners:
                rows.append(MetricsRow(ds.name, source, beta, seed, fold, learner, status=status))
        return bias, rows, attrs
    bias = compute_bias_row(obs)
    parts = fold_indices(ds.n, cfg.folds, seed)
    for fold, test in enumerate(parts):
        train = np.concatenate([p for i, p in enumerate(parts) if i != fold])
        for learner in cfg.learners:
            row, attr = evaluate_fold(obs, train, test, learner, fold, cfg.attribution, cfg.net)
            rows.append(row)
            if attr is not None:
                attrs.setdefault(learner, []).append(np.abs(attr).mean(axis=0))
    return bias, rows, attrs


_WORKER: dict = {}


def _init_worker(ds, cfg):
    _WORKER["ds"], _WORKER["cfg"] = ds, cfg


def _run_group_in_worker(key):
    return key, run_group(_WORKER["ds"], _WORKER["cfg"], *key)


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("CFBIAS_WORKERS", "1") or 1)
    return max(1, int(workers))


def _write_csv(path: Path, header, rows) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


def _write_dicts(path: Path, records: list[dict]) -> None:
    if not records:
        return
    header = list(records[0])
    _write_csv(path, header, [[_fmt(r[h]) for h in header] for r in records])


def _read_partial(out: Path, cfg: ExperimentConfig):
    done: dict[tuple, tuple] = {}
    bias_p, rows_p = out / "bias.partial.csv", out / "results.partial.csv"
    if not (bias_p.exists() and rows_p.exists()):
        return done
    with bias_p.open(newline="") as fh:
        biases = {(b.policy_source, b.beta, b.seed): b
                  for b in map(BiasRow.from_csv, csv.DictReader(fh))}
    rows: dict[tuple, list[MetricsRow]] = {}
    with rows_p.open(newline="") as fh:
        for rec in csv.DictReader(fh):
            try:
                r = MetricsRow.from_csv(rec)
            except (KeyError, ValueError):
                continue  # torn final line from an interrupted run
            rows.setdefault((r.policy_source, r.beta, r.seed), []).append(r)
    expected = cfg.folds * len(cfg.learners)
    for key, bias in biases.items():
        got = rows.get(key, [])
        if len(got) == expected:
            done[key] = (bias, got, {})
    return done


def run_sweep(cfg: ExperimentConfig, out_dir=None, workers: int | None = None,
              ds: PotentialDataset | None = None, resume: bool = True,
              base_dir: Path | None = None) -> ResultsTable:
    """Run every configured cell; write CSVs to ``out_dir`` if given."""
    ds = ds if ds is not None else build_dataset(cfg, base_dir)
    keys = [(s, b, seed) for s in cfg.policy_sources for b in cfg.beta_grid for seed in cfg.seeds]
    out = Path(out_dir) if out_dir is not None else None
    done: dict[tuple, tuple] = {}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if resume:
            done = {k: v for k, v in _read_partial(out, cfg).items() if k in set(keys)}
        else:
            for name in ("bias.partial.csv", "results.partial.csv"):
                (out / name).unlink(missing_ok=True)
    results: dict[tuple, tuple] = dict(done)
    todo = [k for k in keys if k not in done]

    partial_rows = partial_bias = None
    if out is not None:
        new_rows = not (out / "results.partial.csv").exists() or not done
        partial_rows = (out / "results.partial.csv").open("w" if new_rows else "a", newline="")
        partial_bias = (out / "bias.partial.csv").open("w" if new_rows else "a", newline="")
        if new_rows:
            csv.writer(partial_rows, lineterminator="\n").writerow(RESULT_COLUMNS)
            csv.writer(partial_bias, lineterminator="\n").writerow(BIAS_COLUMNS)

    def sink(key, value):
        results[key] = value
        if partial_rows is not None:
            bias, rows, _ = value
            csv.writer(partial_rows, lineterminator="\n").writerows(r.to_csv() for r in rows)
            partial_rows.flush()
            # the bias row marks the group complete, so it goes last
            csv.writer(partial_bias, lineterminator="\n").writerow(bias.to_csv())
            partial_bias.flush()

    n_workers = resolve_workers(workers)
    try:
        if n_workers == 1 or len(todo) <= 1:
            for key in todo:
                sink(key, run_group(ds, cfg, *key))
        else:
            with ProcessPoolExecutor(n_workers, initializer=_init_worker,
                                     initargs=(ds, cfg)) as pool:
                for key, value in pool.map(_run_group_in_worker, todo):
                    sink(key, value)
    finally:
        if partial_rows is not None:
            partial_rows.close()
            partial_bias.close()

    table = ResultsTable(meta={
        "dataset": ds.name, "n": ds.n, "d": ds.d,
        "prec_ass_pi_scope": "test fold", "prec_ass_model_scope": "test fold",
        "attribution": asdict(cfg.attribution), "config": cfg.to_dict(),
    })
    ranking_acc: dict[tuple, list[np.ndarray]] = {}
    for key in keys:
        bias, rows, attrs = results[key]
        table.bias_rows.append(bias)
        order = {(f, l): i for i, (f, l) in enumerate(
            (f, l) for f in range(cfg.folds) for l in cfg.learners)}
        table.rows.extend(sorted(rows, key=lambda r: order[(r.fold, r.learner)]))
        for learner, vecs in attrs.items():
            ranking_acc.setdefault((key[0], key[1], learner), []).extend(vecs)
    for (src, beta, learner), vecs in ranking_acc.items():
        table.rankings[(src, beta, learner)] = biomarker_ranking(
            np.vstack(vecs), ds.feature_names, ds.partition)
    if out is not None:
        write_results(table, out)
    return table


def write_results(table: ResultsTable, out: Path) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "results.csv", RESULT_COLUMNS, [r.to_csv() for r in table.rows])
    _write_csv(out / "bias.csv", BIAS_COLUMNS, [b.to_csv() for b in table.bias_rows])
    _write_dicts(out / "summary.csv", table.summary())
    _write_dicts(out / "bias_summary.csv", table.bias_summary())
    if table.rankings:
        recs = []
        for (src, beta, learner), ranking in table.rankings.items():
            for r in ranking:
                recs.append({"dataset": table.meta.get("dataset", ""), "policy_source": src,
                             "beta": beta, "learner": learner, **r})
        _write_dicts(out / "biomarkers.csv", recs)
    (out / "meta.json").write_text(json.dumps(table.meta, indent=2, sort_keys=True) + "\n")
    errors = [{"key": list(r.key), "status": r.status} for r in table.failed]
    err_path = out / "errors.json"
    if errors:
        err_path.write_text(json.dumps(errors, indent=2) + "\n")
    else:
        err_path.unlink(missing_ok=True)
    for name in ("bias.partial.csv", "results.partial.csv"):
        (out / name).unlink(missing_ok=True)


def load_results(out) -> ResultsTable:
    out = Path(out)
    table = ResultsTable()
    with (out / "results.csv").open(newline="") as fh:
        table.rows = [MetricsRow.from_csv(r) for r in csv.DictReader(fh)]
    with (out / "bias.csv").open(newline="") as fh:
        table.bias_rows = [BiasRow.from_csv(r) for r in csv.DictReader(fh)]
    meta = out / "meta.json"
    if meta.exists():
        table.meta = json.loads(meta.read_text())
    return table
