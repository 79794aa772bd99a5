"""Seeded samplers for the scalar Gaussian SCM and the multivariate linear SCM.

All samplers are pure functions of their arguments and seed.
"""
import numpy as np

from crlab.data.configs import GaussianScmParams, LinearScmConfig
from crlab.data.dataset import NoiseRecord, ScmDataset
from crlab.data.rng import derive_rng


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")


def sample_linear_scm(config: LinearScmConfig, n: int, seed: int) -> ScmDataset:
    """X ~ N(0, I_d); T = X + eps_T; Y = 1'T_C + 1'X + sigma_y eps_Y."""
    _check_n(n)
    rng = derive_rng(seed, "linear-scm", config.d, config.d_c)
    x = rng.standard_normal((n, config.d))
    eps = rng.standard_normal((n, config.d))
    eps_y = rng.standard_normal(n)

    noise = NoiseRecord(eps=eps, loading=np.eye(config.d), scale=np.ones(config.d))
    t = noise.structural(x) + eps * noise.scale
    y = t[:, : config.d_c].sum(axis=1) + x.sum(axis=1) + config.sigma_y * eps_y
    return ScmDataset(x, t, y, d_c=config.d_c, noise=noise, sigma_y=config.sigma_y)


def sample_scalar_scm(params: GaussianScmParams, n: int, seed: int) -> ScmDataset:
    """Scalar SCM laid out as X = [Z], T = [T_C, T_nC]."""
    _check_n(n)
    rng = derive_rng(seed, "scalar-scm")
    z = np.sqrt(params.var_z) * rng.standard_normal((n, 1))
    eps = rng.standard_normal((n, 2))
    eps_y = rng.standard_normal(n)

    noise = NoiseRecord(
        eps=eps,
        loading=np.array([[params.alpha, params.beta]]),
        scale=np.sqrt([params.var_c, params.var_n]),
    )
    t = noise.structural(z) + eps * noise.scale
    y = params.rho * t[:, 0] + params.delta * z[:, 0] + np.sqrt(params.var_y) * eps_y
    return ScmDataset(z, t, y, d_c=1, noise=noise, sigma_y=float(np.sqrt(params.var_y)))


def intervene_noncausal(data: ScmDataset, seed: int) -> ScmDataset:
    """Resample the exogenous noise of the non-causal treatment columns.

    The confounder path X -> T_nC is kept; X, T_C and Y are carried over untouched.
    """
    if data.noise is None:
        raise ValueError("dataset carries no noise record, cannot intervene")
    noise = data.noise
    d_c = data.d_c
    rng = derive_rng(seed, "intervention")
    fresh = rng.standard_normal((data.n, data.d - d_c))

    t = np.array(data.t)
    t[:, d_c:] = noise.structural(data.x, slice(d_c, None)) + fresh * noise.scale[d_c:]
    eps = np.array(noise.eps)
    eps[:, d_c:] = fresh
    return data.replace(t=t, noise=NoiseRecord(eps=eps, loading=noise.loading, scale=noise.scale))


def compress_causal(tc: np.ndarray, var_g: float, seed: int) -> np.ndarray:
    """G = T_C + eps_G with eps_G ~ N(0, var_g) per entry."""
    if var_g < 0:
        raise ValueError(f"var_g must be nonnegative, got {var_g}")
    tc = np.asarray(tc, dtype=np.float64)
    if var_g == 0:
        return tc.copy()
    rng = derive_rng(seed, "compression")
    return tc + np.sqrt(var_g) * rng.standard_normal(tc.shape)
