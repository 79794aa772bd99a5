"""Acceptance property suite behind the ``check`` subcommand."""
import filecmp
import logging
import os
import tempfile
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import torch
from pydantic import BaseModel
from torch.autograd import gradcheck

from crlab.data.configs import (
    GaussianScmParams,
    MiBenchConfig,
    RepresentationSpec,
    SweepConfig,
    TrainConfig,
    TrainRunConfig,
)
from crlab.data.rng import derive_rng, torch_generator
from crlab.models.analytic import (
    j_value,
    lambda_crit,
    mi_tnc_z_given_tc,
    penalty,
    rank_by_j,
    rank_by_l_gamma,
    utility,
    gamma_of_lambda,
)
from crlab.models.critic import BilinearCritic, infonce_loss
from crlab.models.discrete import discrete_j, purification_gap, random_purifiable_joint
from crlab.models.model import grad_reverse
from crlab.scripts.mi_bench import run_mi_bench
from crlab.scripts.sweep import run_sweep
from crlab.scripts.train import main as train_main

logger = logging.getLogger(__name__)

SLOW = ("mi_sandwich", "noise_sweep", "diagnostic_decay")


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str
    seconds: float


def random_params(rng: np.random.Generator) -> GaussianScmParams:
    """Random valid parameters with beta bounded away from zero."""
    coef = rng.uniform(-2.0, 2.0, size=3)
    beta = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0)
    var = rng.uniform(0.1, 3.0, size=4)
    return GaussianScmParams(
        alpha=coef[0], beta=beta, rho=coef[1], delta=coef[2],
        var_z=var[0], var_c=var[1], var_n=var[2], var_y=var[3],
    )


def check_ideal_vs_naive(seed: int = 0) -> str:
    rng = derive_rng(seed, "check-ideal-vs-naive")
    worst = 0.0
    for _ in range(100):
        params = random_params(rng)
        for lam in (0.1, 0.5, 1.0, 2.0):
            gap = j_value(params, RepresentationSpec.causal(), lam) - j_value(
                params, RepresentationSpec.naive(), lam
            )
            err = abs(gap - lam * mi_tnc_z_given_tc(params))
            assert err <= 1e-12, f"gap off by {err} for {params}"
            assert gap > 0, f"non-positive gap {gap} for {params}"
            worst = max(worst, err)
    return f"max error {worst:.2e}"


def one_sided_derivative(f: Callable[[float], float], h: float = 1e-5) -> float:
    """Second-order forward difference at 0 (the closed forms stop at var_g = 0)."""
    return (-3 * f(0.0) + 4 * f(h) - f(2 * h)) / (2 * h)


def check_lambda_crit() -> str:
    params = GaussianScmParams()
    crit = lambda_crit(params)
    assert crit == 2.0, f"lambda_crit = {crit!r}"
    du = one_sided_derivative(lambda v: utility(params, v))
    dp = one_sided_derivative(lambda v: penalty(params, v))
    ratio = abs(du) / abs(dp)
    assert abs(ratio - crit) <= 1e-4, f"finite-difference ratio {ratio}"
    return f"lambda_crit={crit}, finite-difference ratio={ratio:.6f}"


def check_lossless_regime() -> str:
    params = GaussianScmParams()
    grid = np.logspace(-3, 3, 30)
    causal = RepresentationSpec.causal()
    for v in grid:
        rep = RepresentationSpec.compressed(float(v))
        assert j_value(params, causal, 1.0) > j_value(params, rep, 1.0), f"var_g={v} wins at 1"
    winners = [
        v for v in grid
        if j_value(params, RepresentationSpec.compressed(float(v)), 5.0) > j_value(params, causal, 5.0)
    ]
    assert winners, "no compressed representation wins at lambda=5"
    return f"{len(winners)} compressed representations win at lambda=5"


def check_gamma_ranking(seed: int = 0) -> str:
    rng = derive_rng(seed, "check-gamma")
    for _ in range(20):
        params = random_params(rng)
        menu = [RepresentationSpec.causal(), RepresentationSpec.naive()]
        menu += [RepresentationSpec.compressed(float(v)) for v in rng.uniform(0.01, 10.0, size=4)]
        lam = float(rng.uniform(0.0, 5.0))
        by_j = rank_by_j(params, menu, lam)
        by_gamma = rank_by_l_gamma(params, menu, gamma_of_lambda(lam))
        assert by_j == by_gamma, f"rankings differ at lambda={lam}: {by_j} vs {by_gamma}"
    return "20 menus ranked identically"


def check_purification(seed: int = 0) -> str:
    rng = derive_rng(seed, "check-purification")
    worst = 0.0
    for _ in range(200):
        n_gbar = int(rng.integers(1, 5))
        joint, mapping = random_purifiable_joint(
            rng, n_gbar=n_gbar, fiber=int(rng.integers(1, 8 // n_gbar + 1)),
            n_y=int(rng.integers(2, 9)), n_z=int(rng.integers(2, 9)),
        )
        lam = float(rng.uniform(0.0, 3.0))
        gap = purification_gap(joint, mapping)
        diff = discrete_j(joint.coarsen(mapping), lam) - discrete_j(joint, lam)
        err = abs(diff - lam * gap)
        assert err <= 1e-10, f"identity off by {err}"
        assert diff >= -1e-12, f"purification lowered J by {-diff}"
        worst = max(worst, err)
    return f"max error {worst:.2e}"


def check_mi_sandwich(seed: int = 0) -> str:
    cfg = MiBenchConfig(seed=seed)
    frame = run_mi_bench(cfg, write=False)
    for row in frame.itertuples():
        assert row.error is None, f"corr={row.corr}: {row.error}"
        assert row.lower <= row.true_mi + 0.1, f"corr={row.corr}: lower {row.lower} > {row.true_mi}+0.1"
        assert row.upper >= row.true_mi - 0.15, f"corr={row.corr}: upper {row.upper} < {row.true_mi}-0.15"
    return "; ".join(
        f"corr={r.corr}: {r.lower:.3f} <= {r.true_mi:.3f} <~ {r.upper:.3f}" for r in frame.itertuples()
    )


def check_noise_sweep(seed: int = 0, workers: int = 1) -> str:
    cfg = SweepConfig(seed=seed, workers=workers)
    table = run_sweep(cfg, write=False)
    assert not table.failed, f"{len(table.failed)} runs failed"
    stats = {(a.kind, a.method, a.sigma_y): a for a in table.aggregates}
    for sigma_y in cfg.sigma_y_grid:
        base_med = stats[("median", "baseline", sigma_y)].sensitivity
        base_iqr = stats[("iqr", "baseline", sigma_y)].sensitivity
        crl_med = stats[("median", "crl", sigma_y)].sensitivity
        delta_med = stats[("median", "delta", sigma_y)].mae
        delta_iqr = stats[("iqr", "delta", sigma_y)].mae
        assert crl_med < 0.2 * base_med, f"sigma_y={sigma_y}: crl {crl_med} vs baseline {base_med}"
        assert base_med > 5 * base_iqr, f"sigma_y={sigma_y}: baseline {base_med} vs IQR {base_iqr}"
        assert abs(delta_med) < delta_iqr, f"sigma_y={sigma_y}: dMAE {delta_med} vs IQR {delta_iqr}"
    return f"{len(table.runs)} runs"


def check_diagnostic_decay(seed: int = 0) -> str:
    cfg = TrainConfig(seed=seed)
    result = train_main(TrainRunConfig(train=cfg))
    lower = np.asarray(result.trace_lower)
    tail = lower[-max(1, cfg.epochs // 20):].mean()
    peak = lower[cfg.ramp_start : cfg.ramp_end + 1].max()
    assert tail <= 0.5 * peak, f"final bound {tail:.4f} vs ramp peak {peak:.4f}"
    return f"final {tail:.4f} <= 0.5 x peak {peak:.4f}"


def _gradcheck(fn, inputs) -> bool:
    return gradcheck(fn, inputs, eps=1e-5, atol=1e-7, rtol=1e-4)


def check_gradients(seed: int = 0) -> str:
    generator = torch_generator(seed, "check-gradients")

    def randn(*shape):
        return torch.randn(*shape, generator=generator, dtype=torch.float64, requires_grad=True)

    critic = BilinearCritic(4, 4, 4, generator=generator)
    reps, conds = randn(8, 4), randn(8, 4)
    w_g, w_x = randn(4, 4), randn(4, 4)

    def nce(w_g, w_x, reps):
        scores = (reps @ w_g.T) @ (conds @ w_x.T).T / critic.tau
        return torch.nn.functional.cross_entropy(scores, torch.arange(scores.shape[0]))

    assert _gradcheck(nce, (w_g, w_x, reps)), "InfoNCE gradient"
    with torch.no_grad():
        critic.w_g.weight.copy_(w_g)
        critic.w_x.weight.copy_(w_x)
    loss, _ = infonce_loss(critic, reps, conds)
    (auto_w_g,) = torch.autograd.grad(loss, critic.w_g.weight)
    assert torch.allclose(auto_w_g, torch.autograd.grad(nce(w_g, w_x, reps), w_g)[0]), "critic module"

    # predictor objective as seen through the reversal: mse - lam * infonce
    adversary = BilinearCritic(3, 3, 4, generator=generator)
    x, t, y = randn(8, 3).detach(), randn(8, 3).detach(), randn(8).detach()
    for lam in (0.0, 0.5):
        def objective(w_x_, w_t_, b_):
            mse = ((x @ w_x_ + t @ w_t_ + b_ - y) ** 2).mean()
            scores = adversary(t * w_t_, x)
            return mse - lam * torch.nn.functional.cross_entropy(scores, torch.arange(8))

        params = (randn(3), randn(3), randn(1))
        assert _gradcheck(objective, params), f"predictor objective at lambda={lam}"

        w_x_, w_t_, b_ = params
        mse = ((x @ w_x_ + t @ w_t_ + b_ - y) ** 2).mean()
        reversed_nce, _ = infonce_loss(adversary, grad_reverse(t * w_t_, lam), x)
        through_grl = torch.autograd.grad(mse + reversed_nce, params)
        direct = torch.autograd.grad(objective(*params), params)
        for a, b in zip(through_grl, direct):
            assert torch.allclose(a, b, rtol=1e-10, atol=1e-12), f"reversal composition at lambda={lam}"
    return "InfoNCE, critic, predictor and reversal gradients match"


def check_determinism(seed: int = 0) -> str:
    with tempfile.TemporaryDirectory() as folder:
        paths = []
        for attempt in range(2):
            sweep = SweepConfig(
                sigma_y_grid=[0.0, 0.5], seeds=2, seed=seed, n_train=128, n_val=128,
                train=TrainConfig(epochs=3, ramp_start=1, ramp_end=2),
                out=os.path.join(folder, f"sweep{attempt}.csv"),
            )
            bench = MiBenchConfig(
                correlations=[0.0, 0.8], steps=20, eval_batches=2, batch_size=32, seed=seed,
                out=os.path.join(folder, f"bench{attempt}.csv"),
            )
            run_sweep(sweep)
            run_mi_bench(bench)
            paths.append((sweep.out, bench.out))
        for first, second in zip(*paths):
            assert filecmp.cmp(first, second, shallow=False), f"{first} != {second}"
    return "sweep and mi-bench outputs byte-identical"


def _checks(seed: int, workers: int) -> Dict[str, Callable[[], str]]:
    return {
        "ideal_vs_naive": lambda: check_ideal_vs_naive(seed),
        "lambda_crit": check_lambda_crit,
        "lossless_regime": check_lossless_regime,
        "gamma_ranking": lambda: check_gamma_ranking(seed),
        "purification": lambda: check_purification(seed),
        "mi_sandwich": lambda: check_mi_sandwich(seed),
        "noise_sweep": lambda: check_noise_sweep(seed, workers),
        "diagnostic_decay": lambda: check_diagnostic_decay(seed),
        "gradients": lambda: check_gradients(seed),
        "determinism": lambda: check_determinism(seed),
    }


CHECK_NAMES = list(_checks(0, 1))


def run_checks(
    names: Optional[Sequence[str]] = None, skip_slow: bool = False, workers: int = 1, seed: int = 0
) -> List[CheckResult]:
    checks = _checks(seed, workers)
    names = list(names or checks)
    unknown = set(names) - set(checks)
    if unknown:
        raise ValueError(f"unknown checks {sorted(unknown)}")
    results = []
    for name in names:
        if skip_slow and name in SLOW:
            continue
        start = time.perf_counter()
        try:
            detail, passed = checks[name](), True
        except AssertionError as exc:
            detail, passed = str(exc), False
        except Exception as exc:
            logger.exception("check %s crashed", name)
            detail, passed = f"{type(exc).__name__}: {exc}", False
        seconds = time.perf_counter() - start
        logger.info("%s %s (%.1fs): %s", "PASS" if passed else "FAIL", name, seconds, detail)
        results.append(CheckResult(name=name, passed=passed, detail=detail, seconds=seconds))
    return results
