import logging
import os
from typing import List, Optional

import pandas as pd

from crlab.data.configs import AnalyticConfig, RepresentationSpec
from crlab.errors import DegenerateParametersError
from crlab.models.analytic import (
    gamma_of_lambda,
    j_value,
    l_gamma,
    lambda_crit,
    leakage_j,
    leakage_penalty,
    leakage_utility,
)

logger = logging.getLogger(__name__)


def _write(frame: pd.DataFrame, path: str) -> str:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def analytic_frame(cfg: AnalyticConfig) -> pd.DataFrame:
    """J(lambda) for causal, naive and every compressed representation in the grid."""
    params = cfg.params
    try:
        crit: Optional[float] = lambda_crit(params)
    except DegenerateParametersError as exc:
        logger.warning("lambda_crit omitted: %s", exc)
        crit = None

    reps: List[RepresentationSpec] = [RepresentationSpec.causal(), RepresentationSpec.naive()]
    reps += [RepresentationSpec.compressed(v) for v in cfg.var_g_grid]
    records = []
    for lam in cfg.lambda_grid:
        gamma = gamma_of_lambda(lam)
        for rep in reps:
            record = {
                "lambda": lam,
                "representation": rep.label,
                "var_g": rep.var_g,
                "j": j_value(params, rep, lam),
                "gamma": gamma,
                "l_gamma": l_gamma(params, rep, gamma),
            }
            if crit is not None:
                record["lambda_crit"] = crit
            records.append(record)
    return pd.DataFrame.from_records(records)


def emit_analytic_curves(cfg: AnalyticConfig) -> str:
    return _write(analytic_frame(cfg), cfg.out)


def leakage_frame(cfg: AnalyticConfig) -> pd.DataFrame:
    """Representations keeping T_C plus the first k non-causal coordinates."""
    scm = cfg.scm
    records = []
    for lam in cfg.lambda_grid:
        for kept in range(scm.d - scm.d_c + 1):
            records.append(
                {
                    "lambda": lam,
                    "kept": kept,
                    "utility": leakage_utility(scm, kept),
                    "penalty": leakage_penalty(scm, kept),
                    "j": leakage_j(scm, kept, lam),
                }
            )
    return pd.DataFrame.from_records(records)


def emit_leakage_curves(cfg: AnalyticConfig, path: Optional[str] = None) -> str:
    path = path or cfg.leakage_out
    if path is None:
        raise ValueError("no output path for the leakage table")
    return _write(leakage_frame(cfg), path)
