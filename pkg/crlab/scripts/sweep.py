"""Noise sweep over the linear SCM: baseline vs adversarially penalised training.

Each (sigma_y, seed, method) job derives its data and initialisation from the
base seed, sigma_y and the seed index only, so both methods see the same data
and results do not depend on execution order.
"""
import logging
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
import torch
from pydantic import BaseModel, ValidationError
from scipy.stats import iqr
from tqdm.auto import tqdm

from crlab.data.configs import SweepConfig
from crlab.data.rng import derive_seed
from crlab.data.scm import sample_linear_scm
from crlab.errors import EmptyResultTableError, ResultTableError
from crlab.scripts.train import train

logger = logging.getLogger(__name__)

COLUMNS = ["kind", "method", "sigma_y", "seed", "mae", "sensitivity", "error"]
DELTA = "delta"


class RunRow(BaseModel):
    method: Literal["baseline", "crl"]
    sigma_y: float
    seed: int
    mae: Optional[float] = None
    sensitivity: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class AggregateRow(BaseModel):
    kind: Literal["median", "iqr"]
    method: Literal["baseline", "crl", "delta"]
    sigma_y: float
    mae: Optional[float] = None
    sensitivity: Optional[float] = None


class ResultTable(BaseModel):
    runs: List[RunRow]
    aggregates: List[AggregateRow]

    @classmethod
    def from_runs(cls, runs: List[RunRow]) -> "ResultTable":
        runs = sorted(runs, key=lambda r: (r.method, r.sigma_y, r.seed))
        return cls(runs=runs, aggregates=aggregate(runs))

    @property
    def failed(self) -> List[RunRow]:
        return [r for r in self.runs if not r.ok]

    def to_frame(self) -> pd.DataFrame:
        records = [{"kind": "run", **r.model_dump()} for r in self.runs]
        records += [{**a.model_dump(), "seed": None, "error": None} for a in self.aggregates]
        frame = pd.DataFrame.from_records(records, columns=COLUMNS)
        frame["seed"] = pd.array([r["seed"] for r in records], dtype="UInt64")
        return frame

    def save(self, path: str) -> str:
        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        return path


def _median_iqr(values: List[float]) -> Tuple[float, float]:
    array = np.asarray(values, dtype=np.float64)
    return float(np.median(array)), float(iqr(array))


def aggregate(runs: List[RunRow]) -> List[AggregateRow]:
    """Per-(method, sigma_y) medians and IQRs, plus paired delta MAE (crl - baseline)."""
    groups: Dict[Tuple[str, float], List[RunRow]] = {}
    for r in runs:
        if r.ok:
            groups.setdefault((r.method, r.sigma_y), []).append(r)

    rows = []
    for (method, sigma_y), group in sorted(groups.items()):
        mae = _median_iqr([r.mae for r in group])
        sens = _median_iqr([r.sensitivity for r in group])
        rows.append(AggregateRow(kind="median", method=method, sigma_y=sigma_y, mae=mae[0], sensitivity=sens[0]))
        rows.append(AggregateRow(kind="iqr", method=method, sigma_y=sigma_y, mae=mae[1], sensitivity=sens[1]))

    for sigma_y in sorted({s for _, s in groups}):
        baseline = {r.seed: r.mae for r in groups.get(("baseline", sigma_y), [])}
        crl = {r.seed: r.mae for r in groups.get(("crl", sigma_y), [])}
        paired = [crl[s] - baseline[s] for s in sorted(baseline.keys() & crl.keys())]
        if paired:
            median, spread = _median_iqr(paired)
            rows.append(AggregateRow(kind="median", method=DELTA, sigma_y=sigma_y, mae=median))
            rows.append(AggregateRow(kind="iqr", method=DELTA, sigma_y=sigma_y, mae=spread))
    return rows


class SweepJob(BaseModel):
    config: SweepConfig
    method: Literal["baseline", "crl"]
    sigma_y: float
    seed: int


def run_job(job: SweepJob) -> RunRow:
    torch.set_num_threads(1)
    cfg = job.config
    scm = cfg.scm.model_copy(update={"sigma_y": job.sigma_y})
    data_seed = derive_seed(cfg.seed, "sweep", job.sigma_y, job.seed)
    train_cfg = cfg.train.model_copy(
        update={
            "seed": data_seed,
            "lambda_max": cfg.train.lambda_max if job.method == "crl" else 0.0,
            "progress": False,
            "logger_type": None,
        }
    )
    try:
        data = sample_linear_scm(scm, cfg.n_train, derive_seed(data_seed, "train-data"))
        validation = sample_linear_scm(scm, cfg.n_val, derive_seed(data_seed, "validation-data"))
        result = train(train_cfg, data, validation)
    except Exception as exc:
        logger.warning(
            "run failed (method=%s, sigma_y=%s, seed=%d): %s", job.method, job.sigma_y, job.seed, exc
        )
        return RunRow(method=job.method, sigma_y=job.sigma_y, seed=job.seed, error=f"{type(exc).__name__}: {exc}")
    return RunRow(
        method=job.method, sigma_y=job.sigma_y, seed=job.seed, mae=result.mae, sensitivity=result.sensitivity
    )


def sweep_jobs(cfg: SweepConfig) -> List[SweepJob]:
    return [
        SweepJob(config=cfg, method=method, sigma_y=sigma_y, seed=seed)
        for sigma_y in cfg.sigma_y_grid
        for seed in range(cfg.seeds)
        for method in cfg.methods
    ]


def run_sweep(cfg: SweepConfig, write: bool = True) -> ResultTable:
    jobs = sweep_jobs(cfg)
    logger.info("running %d jobs on %d worker(s)", len(jobs), cfg.workers)
    if cfg.workers == 1:
        rows = [run_job(job) for job in tqdm(jobs, desc="Runs")]
    else:
        context = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=context) as pool:
            rows = list(tqdm(pool.map(run_job, jobs), total=len(jobs), desc="Runs"))

    table = ResultTable.from_runs(rows)
    if table.failed:
        logger.warning("%d of %d runs failed", len(table.failed), len(rows))
    if write:
        table.save(cfg.out)
    return table


def _same(a: Optional[float], b: Optional[float]) -> bool:
    return (a is None and b is None) or (a is not None and b is not None and a == b)


def load_result_table(path: str) -> ResultTable:
    """Read a sweep table and check that its aggregates match its raw rows."""
    try:
        # parse every cell as text; pydantic converts and reports bad cells per line
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise EmptyResultTableError(f"{path} is empty")
    if frame.empty:
        raise EmptyResultTableError(f"{path} has a header but no rows")
    missing = set(COLUMNS) - set(frame.columns)
    if missing:
        raise ResultTableError(f"missing columns {sorted(missing)}", line=1)

    runs, aggregates = [], []
    for idx, record in enumerate(frame.to_dict("records")):
        line = idx + 2
        record = {k: (v if v != "" else None) for k, v in record.items()}
        kind = record.pop("kind")
        try:
            if kind == "run":
                runs.append(RunRow(**record))
            elif kind in ("median", "iqr"):
                record.pop("seed")
                record.pop("error")
                aggregates.append(AggregateRow(kind=kind, **record))
            else:
                raise ResultTableError(f"unknown row kind {kind!r}", line=line)
        except ValidationError as exc:
            raise ResultTableError(str(exc), line=line)

    table = ResultTable(runs=runs, aggregates=aggregates)
    expected = aggregate(runs)
    if len(expected) != len(aggregates):
        raise ResultTableError(f"expected {len(expected)} aggregate rows, found {len(aggregates)}")
    for want, got in zip(expected, aggregates):
        key = (want.kind, want.method, want.sigma_y)
        if key != (got.kind, got.method, got.sigma_y) or not (
            _same(want.mae, got.mae) and _same(want.sensitivity, got.sensitivity)
        ):
            raise ResultTableError(f"aggregate {key} does not match its raw rows")
    return table
