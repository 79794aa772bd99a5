import numpy as np
import pandas as pd
import pytest

from crlab.data.configs import AnalyticConfig, GaussianScmParams
from crlab.models.analytic import utility
from crlab.scripts.analytic import (
    analytic_frame,
    emit_analytic_curves,
    emit_leakage_curves,
    leakage_frame,
)


def j_table(frame):
    return frame.pivot_table(index="lambda", columns=["representation", "var_g"], values="j")


def test_frame_covers_every_representation():
    cfg = AnalyticConfig(lambda_grid=[0.0, 1.0], var_g_grid=[0.5, 2.0])
    frame = analytic_frame(cfg)
    assert len(frame) == 2 * 4
    assert list(frame.columns) == ["lambda", "representation", "var_g", "j", "gamma", "l_gamma", "lambda_crit"]
    assert set(frame["lambda_crit"]) == {2.0}


def test_lossless_representations_agree_at_zero_weight():
    frame = analytic_frame(AnalyticConfig())
    at_zero = frame[(frame["lambda"] == 0.0) & (frame["var_g"] == 0.0)]
    assert len(at_zero) == 2
    assert np.all(at_zero["j"] == utility(GaussianScmParams(), 0.0))


def test_causal_dominates_naive():
    frame = analytic_frame(AnalyticConfig())
    table = j_table(frame[frame["lambda"] > 0])
    assert np.all(table[("causal", 0.0)] > table[("naive", 0.0)])


def test_crossover_at_lambda_crit():
    step = 0.01
    cfg = AnalyticConfig(lambda_grid=[round(step * i, 2) for i in range(301)], var_g_grid=[1e-4])
    table = j_table(analytic_frame(cfg))
    wins = table.index[table[("compressed", 1e-4)] > table[("causal", 0.0)]]
    assert 2.0 <= wins.min() <= 2.0 + step


def test_degenerate_params_drop_lambda_crit():
    frame = analytic_frame(AnalyticConfig(params=GaussianScmParams(alpha=0.0), lambda_grid=[1.0]))
    assert "lambda_crit" not in frame.columns


def test_emit_writes_csv(tmp_path):
    cfg = AnalyticConfig(lambda_grid=[0.0, 0.5], out=str(tmp_path / "out" / "analytic.csv"))
    path = emit_analytic_curves(cfg)
    loaded = pd.read_csv(path, float_precision="round_trip")
    pd.testing.assert_frame_equal(loaded, analytic_frame(cfg), check_exact=True, check_dtype=False)


def test_leakage_curves(tmp_path):
    cfg = AnalyticConfig(lambda_grid=[0.0, 1.0])
    frame = leakage_frame(cfg)
    assert len(frame) == 2 * 6
    at_one = frame[frame["lambda"] == 1.0]
    assert np.all(np.diff(at_one["j"].to_numpy()) < 0)
    with pytest.raises(ValueError):
        emit_leakage_curves(cfg)
    path = emit_leakage_curves(cfg, str(tmp_path / "leak.csv"))
    assert pd.read_csv(path).shape == frame.shape
