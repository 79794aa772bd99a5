import math

import pytest
import torch
from pydantic import ValidationError
from torch.autograd import gradcheck
from torch.func import functional_call

from crlab.data.rng import torch_generator
from crlab.errors import TrainingDivergedError
from crlab.models.critic import (
    BilinearCritic,
    MiEstimate,
    evaluate_bounds,
    infonce_loss,
    nce_club_estimate,
    shuffled_marginals,
    train_critic,
)
from crlab.scripts.mi_bench import gaussian_pair_sampler


def randn(*shape, seed=0):
    return torch.randn(*shape, generator=torch_generator(seed, "test", *shape), dtype=torch.float64)


def zero_critic(dim=4):
    critic = BilinearCritic(dim, dim, dim)
    with torch.no_grad():
        critic.w_g.weight.zero_()
        critic.w_x.weight.zero_()
    return critic


def test_constant_critic_gives_log_batch_loss():
    reps, conds = randn(16, 4), randn(16, 4, seed=1)
    loss, lower = infonce_loss(zero_critic(), reps, conds)
    assert loss.item() == pytest.approx(math.log(16), abs=1e-12)
    assert lower == pytest.approx(0.0, abs=1e-12)
    assert nce_club_estimate(zero_critic(), reps, conds, *shuffled_marginals(reps, conds)) == 0.0


def test_saturated_scores_reach_the_cap():
    batch, margin = 8, 50.0
    critic = BilinearCritic(batch, batch, batch)
    with torch.no_grad():
        critic.w_g.weight.copy_(math.sqrt(margin) * torch.eye(batch, dtype=torch.float64))
        critic.w_x.weight.copy_(math.sqrt(margin) * torch.eye(batch, dtype=torch.float64))
    eye = torch.eye(batch, dtype=torch.float64)
    loss, lower = infonce_loss(critic, eye, eye)
    assert loss.item() < 1e-10
    assert lower == pytest.approx(math.log(batch), abs=1e-9)


def test_lower_bound_never_exceeds_log_batch():
    for seed in range(10):
        critic = BilinearCritic(3, 3, 5, tau=0.1, generator=torch_generator(seed, "critic"))
        x = randn(32, 3, seed=seed)
        _, lower = infonce_loss(critic, 10 * x, x)
        assert lower <= math.log(32)


def test_infonce_rejects_bad_batches():
    critic = BilinearCritic(2, 2, 2)
    with pytest.raises(ValueError):
        infonce_loss(critic, randn(1, 2), randn(1, 2))
    with pytest.raises(ValueError):
        infonce_loss(critic, randn(4, 2), randn(5, 2))
    with pytest.raises(ValueError):
        BilinearCritic(2, 2, 2, tau=0.0)


def test_mi_estimate_cap():
    MiEstimate(lower_bound_nats=math.log(4), upper_bound_nats=3.0, batch_size=4)
    with pytest.raises(ValidationError):
        MiEstimate(lower_bound_nats=math.log(4) + 1e-6, upper_bound_nats=3.0, batch_size=4)


def test_infonce_gradients_match_finite_differences():
    critic = BilinearCritic(4, 4, 4, generator=torch_generator(0, "critic"))
    conds = randn(8, 4, seed=1)
    inputs = (
        critic.w_g.weight.detach().clone().requires_grad_(),
        critic.w_x.weight.detach().clone().requires_grad_(),
        randn(8, 4, seed=2).requires_grad_(),
    )

    def loss(w_g, w_x, reps):
        scores = functional_call(critic, {"w_g.weight": w_g, "w_x.weight": w_x}, (reps, conds))
        return torch.nn.functional.cross_entropy(scores, torch.arange(8))

    assert gradcheck(loss, inputs, eps=1e-5, atol=1e-7, rtol=1e-4)
    reference = loss(*inputs)
    module_loss, _ = infonce_loss(critic, inputs[2], conds)
    assert module_loss.item() == pytest.approx(reference.item(), abs=1e-14)


def test_shuffled_pairs_score_like_marginals():
    critic = BilinearCritic(4, 4, 4, generator=torch_generator(3, "critic"))
    reps = randn(256, 4, seed=4)
    generator = torch_generator(5, "shuffles")
    estimates = []
    for _ in range(200):
        joint = shuffled_marginals(reps, reps, generator)
        estimates.append(nce_club_estimate(critic, *joint, *shuffled_marginals(reps, reps, generator)))
    assert abs(sum(estimates) / len(estimates)) <= 0.05


def test_shuffled_marginals_permutes_conditioners_only():
    reps, conds = randn(10, 2), randn(10, 2, seed=1)
    same, shuffled = shuffled_marginals(reps, conds, torch_generator(0, "perm"))
    assert same is reps
    assert sorted(shuffled[:, 0].tolist()) == sorted(conds[:, 0].tolist())


def test_zero_learning_rate_leaves_critic_unchanged():
    critic = BilinearCritic(1, 1, 4, generator=torch_generator(0, "critic"))
    trained = train_critic(critic, gaussian_pair_sampler(0.5, 32), steps=5, learning_rate=0.0, seed=1)
    assert trained is not critic
    assert torch.equal(trained.w_g.weight, critic.w_g.weight)
    assert torch.equal(trained.w_x.weight, critic.w_x.weight)


def test_training_is_deterministic_per_seed():
    critic = BilinearCritic(1, 1, 4, generator=torch_generator(0, "critic"))
    sampler = gaussian_pair_sampler(0.8, 32)
    a = train_critic(critic, sampler, steps=20, learning_rate=1e-2, seed=3)
    b = train_critic(critic, sampler, steps=20, learning_rate=1e-2, seed=3)
    assert torch.equal(a.w_g.weight, b.w_g.weight)
    assert evaluate_bounds(a, sampler, 3, seed=4) == evaluate_bounds(b, sampler, 3, seed=4)


def test_training_learns_dependence():
    critic = BilinearCritic(1, 1, 8, generator=torch_generator(0, "critic"))
    sampler = gaussian_pair_sampler(0.95, 128)
    before = evaluate_bounds(critic, sampler, 10, seed=1)
    trained = train_critic(critic, sampler, steps=500, learning_rate=1e-2, seed=2)
    after = evaluate_bounds(trained, sampler, 10, seed=1)
    assert after.lower_bound_nats > before.lower_bound_nats
    assert after.lower_bound_nats > 0.3
    assert after.upper_bound_nats > 0.0


def test_training_rejects_nonpositive_steps():
    with pytest.raises(ValueError):
        train_critic(BilinearCritic(1, 1, 2), gaussian_pair_sampler(0.5, 8), 0, 1e-3, 0)


def test_divergent_sampler_aborts():
    def sampler(generator):
        x = torch.full((8, 1), float("nan"), dtype=torch.float64)
        return x, x

    with pytest.raises(TrainingDivergedError) as info:
        train_critic(BilinearCritic(1, 1, 2), sampler, steps=3, learning_rate=1e-3, seed=0)
    assert info.value.stage == "critic" and info.value.step == 0


@pytest.mark.slow
@pytest.mark.parametrize("corr", [0.0, 0.8])
def test_trained_bounds_bracket_true_mi(corr):
    from crlab.scripts.mi_bench import gaussian_mi

    critic = BilinearCritic(1, 1, 8, generator=torch_generator(0, "critic"))
    sampler = gaussian_pair_sampler(corr, 256)
    trained = train_critic(critic, sampler, steps=10_000, learning_rate=1e-3, seed=1)
    estimate = evaluate_bounds(trained, sampler, 100, seed=2)
    assert estimate.lower_bound_nats <= gaussian_mi(corr) + 0.1
    assert estimate.upper_bound_nats >= gaussian_mi(corr) - 0.15


def test_tied_pairs_saturate_the_bound():
    dim, batch = 32, 128

    def tied(generator):
        a = torch.randn(batch, dim, generator=generator, dtype=torch.float64)
        return a, a

    critic = BilinearCritic(dim, dim, dim, generator=torch_generator(0, "critic"))
    trained = train_critic(critic, tied, steps=5000, learning_rate=1e-2, seed=1)
    estimate = evaluate_bounds(trained, tied, 10, seed=2)
    assert estimate.lower_bound_nats >= 0.9 * math.log(batch)
