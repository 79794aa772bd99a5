"""Closed-form information quantities of the scalar Gaussian SCM.

All values are in nats. The representation G = T_C + eps_G, eps_G ~ N(0, var_g),
covers the causal (var_g = 0) and compressed cases; the naive representation
(T_C, T_nC) adds the leakage term I(T_nC; Z | T_C) to the penalty.
"""
import math
from typing import Iterable, List, Optional, Sequence

import numpy as np

from crlab.data.configs import (
    GaussianScmParams,
    LinearScmConfig,
    RepresentationKind,
    RepresentationSpec,
)
from crlab.errors import DegenerateParametersError


def _check_var_g(var_g: float) -> None:
    if var_g < 0:
        raise ValueError(f"var_g must be nonnegative, got {var_g}")


def _check_lambda(lam: float) -> None:
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")


def mi_tc_z(params: GaussianScmParams) -> float:
    return 0.5 * math.log1p(params.alpha**2 * params.var_z / params.var_c)


def mi_tnc_z_given_tc(params: GaussianScmParams) -> float:
    p = params
    leak = p.beta**2 * p.var_z * p.var_c / (p.var_n * (p.alpha**2 * p.var_z + p.var_c))
    return 0.5 * math.log1p(leak)


def mi_tc_y_given_z(params: GaussianScmParams) -> float:
    return 0.5 * math.log1p(params.rho**2 * params.var_c / params.var_y)


def utility(params: GaussianScmParams, var_g: float) -> float:
    """I(G; Y | Z)."""
    _check_var_g(var_g)
    p = params
    var_y_given_z = p.rho**2 * p.var_c + p.var_y
    explained = p.rho**2 * p.var_c**2 / (p.var_c + var_g)
    return -0.5 * math.log1p(-explained / var_y_given_z)


def penalty(params: GaussianScmParams, var_g: float) -> float:
    """I(G; Z)."""
    _check_var_g(var_g)
    return 0.5 * math.log1p(params.alpha**2 * params.var_z / (params.var_c + var_g))


def representation_utility(params: GaussianScmParams, rep: RepresentationSpec) -> float:
    # T_nC carries nothing about Y beyond (T_C, Z), so naive and causal share utility
    return utility(params, rep.var_g)


def representation_penalty(params: GaussianScmParams, rep: RepresentationSpec) -> float:
    if rep.kind == RepresentationKind.NAIVE:
        return mi_tc_z(params) + mi_tnc_z_given_tc(params)
    return penalty(params, rep.var_g)


def j_value(params: GaussianScmParams, rep: RepresentationSpec, lam: float) -> float:
    """Disentanglement criterion J = I(g(T); Y | Z) - lambda I(g(T); Z)."""
    _check_lambda(lam)
    return representation_utility(params, rep) - lam * representation_penalty(params, rep)


def lambda_crit(params: GaussianScmParams) -> float:
    """Ratio of marginal utility loss to marginal penalty reduction at var_g = 0."""
    p = params
    if p.alpha == 0:
        raise DegenerateParametersError("lambda_crit is undefined for alpha = 0 (no Z -> T_C path)")
    du = p.rho**2 / (2 * p.var_y)
    dp = p.alpha**2 * p.var_z / (2 * p.var_c * (p.var_c + p.alpha**2 * p.var_z))
    return du / dp


def _compression_deltas(params: GaussianScmParams, var_g: float):
    if var_g <= 0:
        raise DegenerateParametersError("compression deltas vanish at var_g = 0")
    if params.alpha == 0:
        raise DegenerateParametersError("no penalty reduction is possible for alpha = 0")
    du = utility(params, 0.0) - utility(params, var_g)
    dp = penalty(params, 0.0) - penalty(params, var_g)
    return du, dp


def critical_weight(params: GaussianScmParams, var_g: float) -> float:
    """Lambda(phi) = dU / dP for the compression channel with noise var_g."""
    du, dp = _compression_deltas(params, var_g)
    return du / dp


def critical_gamma(params: GaussianScmParams, var_g: float) -> float:
    """Gamma(phi) = dP / (dU + dP); T_C beats the compression iff gamma > Gamma."""
    du, dp = _compression_deltas(params, var_g)
    return dp / (du + dp)


def lambda_star(params: GaussianScmParams, var_g_grid: Iterable[float]) -> float:
    """Smallest critical weight over a grid of compression levels."""
    return min(critical_weight(params, v) for v in var_g_grid)


def gamma_of_lambda(lam: float) -> float:
    _check_lambda(lam)
    return 1.0 / (1.0 + lam)


def lambda_of_gamma(gamma: float) -> float:
    _check_gamma(gamma)
    return 1.0 / gamma - 1.0


def l_gamma(params: GaussianScmParams, rep: RepresentationSpec, gamma: float) -> float:
    """Bounded objective L_gamma = (1 - gamma) I(g; Z) - gamma I(g; Y | Z), minimised."""
    _check_gamma(gamma)
    return (1.0 - gamma) * representation_penalty(params, rep) - gamma * representation_utility(
        params, rep
    )


def rank_by_j(
    params: GaussianScmParams, reps: Sequence[RepresentationSpec], lam: float
) -> List[int]:
    values = np.array([j_value(params, r, lam) for r in reps])
    return np.argsort(-values, kind="stable").tolist()


def rank_by_l_gamma(
    params: GaussianScmParams, reps: Sequence[RepresentationSpec], gamma: float
) -> List[int]:
    values = np.array([l_gamma(params, r, gamma) for r in reps])
    return np.argsort(values, kind="stable").tolist()


# ----- multivariate linear SCM: progressive removal of non-causal leakage -----


def _check_kept(config: LinearScmConfig, kept: int) -> None:
    if not 0 <= kept <= config.d - config.d_c:
        raise ValueError(f"kept must lie in [0, {config.d - config.d_c}], got {kept}")


def leakage_utility(config: LinearScmConfig, kept: int) -> float:
    """I((T_C, T_nC[:kept]); Y | X); the kept non-causal columns add nothing."""
    _check_kept(config, kept)
    if config.sigma_y == 0:
        raise DegenerateParametersError("utility is infinite for a noiseless outcome")
    return 0.5 * math.log1p(config.d_c / config.sigma_y**2)


def leakage_penalty(config: LinearScmConfig, kept: int) -> float:
    """I((T_C, T_nC[:kept]); X); each unit-noise coordinate contributes ln(2)/2."""
    _check_kept(config, kept)
    return (config.d_c + kept) * 0.5 * math.log(2.0)


def leakage_j(config: LinearScmConfig, kept: int, lam: float) -> float:
    _check_lambda(lam)
    return leakage_utility(config, kept) - lam * leakage_penalty(config, kept)


# ----- Monte-Carlo oracle -----


def _logdet_cov(*blocks: np.ndarray) -> float:
    stacked = np.column_stack([np.reshape(b, (b.shape[0], -1)) for b in blocks])
    sign, logdet = np.linalg.slogdet(np.atleast_2d(np.cov(stacked, rowvar=False)))
    if sign <= 0:
        raise DegenerateParametersError("sample covariance is singular")
    return float(logdet)


def empirical_gaussian_mi(
    a: np.ndarray, b: np.ndarray, cond: Optional[np.ndarray] = None
) -> float:
    """Gaussian (conditional) MI from sample covariances.

    I(A; B | C) = 0.5 [log|S_AC| + log|S_BC| - log|S_ABC| - log|S_C|].
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if cond is None:
        return 0.5 * (_logdet_cov(a) + _logdet_cov(b) - _logdet_cov(a, b))
    c = np.asarray(cond, dtype=np.float64)
    return 0.5 * (_logdet_cov(a, c) + _logdet_cov(b, c) - _logdet_cov(a, b, c) - _logdet_cov(c))
