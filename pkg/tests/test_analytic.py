import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crlab.data.configs import GaussianScmParams, LinearScmConfig, RepresentationSpec
from crlab.data.scm import compress_causal, sample_scalar_scm
from crlab.errors import DegenerateParametersError
from crlab.models.analytic import (
    critical_gamma,
    critical_weight,
    empirical_gaussian_mi,
    gamma_of_lambda,
    j_value,
    l_gamma,
    lambda_crit,
    lambda_of_gamma,
    lambda_star,
    leakage_j,
    leakage_penalty,
    leakage_utility,
    mi_tc_y_given_z,
    mi_tc_z,
    mi_tnc_z_given_tc,
    penalty,
    rank_by_j,
    rank_by_l_gamma,
    representation_penalty,
    utility,
)

ONES = GaussianScmParams()
CAUSAL = RepresentationSpec.causal()
NAIVE = RepresentationSpec.naive()
VAR_G_GRID = np.logspace(-3, 3, 30)

coefficients = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)
variances = st.floats(min_value=0.1, max_value=3.0, allow_nan=False, allow_infinity=False)
leaky_params = st.builds(
    GaussianScmParams,
    alpha=coefficients,
    beta=st.one_of(st.floats(min_value=0.1, max_value=2.0), st.floats(min_value=-2.0, max_value=-0.1)),
    rho=coefficients,
    delta=coefficients,
    var_z=variances,
    var_c=variances,
    var_n=variances,
    var_y=variances,
)


def test_mi_tc_z():
    assert mi_tc_z(GaussianScmParams(alpha=0.0, var_z=2.5, var_c=0.3)) == 0.0
    assert mi_tc_z(ONES) == pytest.approx(0.346574, abs=1e-6)
    assert mi_tc_z(GaussianScmParams(alpha=2.0)) == pytest.approx(0.5 * math.log(5), abs=1e-12)


def test_mi_tnc_z_given_tc():
    assert mi_tnc_z_given_tc(GaussianScmParams(beta=0.0)) == 0.0
    assert mi_tnc_z_given_tc(ONES) == pytest.approx(0.5 * math.log(1.5), abs=1e-12)
    assert mi_tnc_z_given_tc(GaussianScmParams(var_n=1e9)) < 1e-6


def test_utility_and_penalty():
    assert utility(ONES, 0.0) == pytest.approx(0.5 * math.log(2), abs=1e-12)
    assert utility(ONES, 0.0) == pytest.approx(mi_tc_y_given_z(ONES), abs=1e-12)
    for v in (0.0, 0.5, 10.0):
        assert utility(GaussianScmParams(rho=0.0), v) == 0.0
    assert penalty(ONES, 1.0) == pytest.approx(0.5 * math.log(1.5), abs=1e-12)
    assert penalty(ONES, 0.0) == mi_tc_z(ONES)
    with pytest.raises(ValueError):
        utility(ONES, -0.1)
    with pytest.raises(ValueError):
        penalty(ONES, -0.1)


def test_j_value():
    gap = j_value(ONES, CAUSAL, 1.0) - j_value(ONES, NAIVE, 1.0)
    assert gap == pytest.approx(0.202733, abs=1e-6)
    assert j_value(ONES, CAUSAL, 0.0) == j_value(ONES, NAIVE, 0.0) == utility(ONES, 0.0)
    with pytest.raises(ValueError):
        j_value(ONES, CAUSAL, -1.0)


def test_naive_penalty_chain_rule():
    assert representation_penalty(ONES, NAIVE) == pytest.approx(
        mi_tc_z(ONES) + mi_tnc_z_given_tc(ONES), abs=1e-15
    )


@settings(max_examples=100, deadline=None)
@given(leaky_params, st.sampled_from([0.1, 0.5, 1.0, 2.0]))
def test_causal_beats_naive_by_leakage(params, lam):
    gap = j_value(params, CAUSAL, lam) - j_value(params, NAIVE, lam)
    assert abs(gap - lam * mi_tnc_z_given_tc(params)) <= 1e-12
    assert gap > 0


def test_lambda_crit():
    assert lambda_crit(ONES) == 2.0
    with pytest.raises(DegenerateParametersError):
        lambda_crit(GaussianScmParams(alpha=0.0))


def test_lambda_crit_matches_finite_difference_slopes():
    h = 1e-5

    def slope(f):
        return (-3 * f(0.0) + 4 * f(h) - f(2 * h)) / (2 * h)

    params = GaussianScmParams(alpha=0.7, rho=1.3, var_z=2.0, var_c=0.5, var_y=0.8)
    ratio = slope(lambda v: utility(params, v)) / slope(lambda v: penalty(params, v))
    assert ratio == pytest.approx(lambda_crit(params), rel=1e-4)


def test_critical_weight_falls_from_lambda_crit_towards_one():
    weights = np.array([critical_weight(ONES, v) for v in VAR_G_GRID])
    assert np.all(np.diff(weights) <= 0)
    assert np.all((weights > 1.0) & (weights < 2.0))
    assert critical_weight(ONES, 1e-6) == pytest.approx(2.0, abs=1e-4)
    assert lambda_star(ONES, VAR_G_GRID) == weights.min()
    for v, w in zip(VAR_G_GRID, weights):
        assert critical_gamma(ONES, v) == pytest.approx(1.0 / (1.0 + w), rel=1e-12)
    with pytest.raises(DegenerateParametersError):
        critical_weight(ONES, 0.0)


def test_compression_never_pays_at_unit_weight():
    for v in VAR_G_GRID:
        assert j_value(ONES, RepresentationSpec.compressed(v), 1.0) < j_value(ONES, CAUSAL, 1.0)


def test_compression_below_lambda_star_loses():
    lam = 0.99 * lambda_star(ONES, VAR_G_GRID)
    for v in VAR_G_GRID:
        assert j_value(ONES, RepresentationSpec.compressed(v), lam) < j_value(ONES, CAUSAL, lam)


def test_compression_pays_for_large_weight():
    wins = [
        v for v in VAR_G_GRID
        if j_value(ONES, RepresentationSpec.compressed(v), 5.0) > j_value(ONES, CAUSAL, 5.0)
    ]
    assert wins


def test_gamma_reparametrisation():
    assert gamma_of_lambda(0.0) == 1.0
    assert gamma_of_lambda(1.0) == 0.5
    assert lambda_of_gamma(gamma_of_lambda(3.0)) == pytest.approx(3.0)
    for bad in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            lambda_of_gamma(bad)
        with pytest.raises(ValueError):
            l_gamma(ONES, CAUSAL, bad)
    lam = 2.5
    for rep in (CAUSAL, NAIVE, RepresentationSpec.compressed(0.7)):
        assert l_gamma(ONES, rep, gamma_of_lambda(lam)) == pytest.approx(
            -j_value(ONES, rep, lam) / (1 + lam), abs=1e-12
        )


@settings(max_examples=50, deadline=None)
@given(
    leaky_params,
    st.sets(st.integers(min_value=1, max_value=1000), min_size=1, max_size=5),
    st.floats(min_value=0.01, max_value=5.0),
)
def test_j_and_l_gamma_rank_alike(params, steps, lam):
    menu = [CAUSAL, NAIVE] + [RepresentationSpec.compressed(0.01 * k) for k in sorted(steps)]
    assert rank_by_j(params, menu, lam) == rank_by_l_gamma(params, menu, gamma_of_lambda(lam))


def test_rank_by_j_orders_best_first():
    menu = [NAIVE, RepresentationSpec.compressed(1.0), CAUSAL]
    assert rank_by_j(ONES, menu, 1.0) == [2, 1, 0]


@settings(max_examples=50, deadline=None)
@given(leaky_params)
def test_utility_and_penalty_nonincreasing(params):
    u = [utility(params, v) for v in VAR_G_GRID]
    p = [penalty(params, v) for v in VAR_G_GRID]
    assert all(a >= b for a, b in zip(u, u[1:]))
    assert all(a >= b for a, b in zip(p, p[1:]))


def test_leakage_curves():
    scm = LinearScmConfig(sigma_y=1.0)
    assert leakage_utility(scm, 0) == pytest.approx(0.5 * math.log(6))
    assert leakage_utility(scm, 3) == leakage_utility(scm, 0)
    assert leakage_penalty(scm, 0) == pytest.approx(5 * 0.5 * math.log(2))
    values = [leakage_j(scm, k, 0.5) for k in range(6)]
    assert all(a > b for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        leakage_penalty(scm, 6)
    with pytest.raises(DegenerateParametersError):
        leakage_utility(LinearScmConfig(sigma_y=0.0), 0)


class TestMonteCarlo:
    """Closed forms against sample-covariance MI on a large scalar-SCM draw."""

    @pytest.fixture(scope="class")
    def data(self):
        return sample_scalar_scm(ONES, 200_000, seed=7)

    def test_mi_tc_z(self, data):
        assert empirical_gaussian_mi(data.t[:, 0], data.x) == pytest.approx(mi_tc_z(ONES), abs=0.02)

    def test_leakage(self, data):
        estimate = empirical_gaussian_mi(data.t[:, 1], data.x, cond=data.t[:, 0])
        assert estimate == pytest.approx(mi_tnc_z_given_tc(ONES), abs=0.02)

    def test_naive_penalty(self, data):
        estimate = empirical_gaussian_mi(data.t, data.x)
        assert estimate == pytest.approx(representation_penalty(ONES, NAIVE), abs=0.02)

    def test_compressed_utility(self, data):
        g = compress_causal(data.t[:, :1], 1.0, seed=3)
        estimate = empirical_gaussian_mi(g, data.y, cond=data.x)
        assert estimate == pytest.approx(utility(ONES, 1.0), abs=0.02)
