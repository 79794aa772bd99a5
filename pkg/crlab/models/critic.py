import copy
import logging
import math
from typing import Callable, Optional, Tuple

import torch
import torch.nn.functional as F
from pydantic import BaseModel, Field, model_validator

from crlab.data.rng import torch_generator
from crlab.errors import TrainingDivergedError

logger = logging.getLogger(__name__)

# draws one (reps, conditioners) batch of aligned rows
PairSampler = Callable[[torch.Generator], Tuple[torch.Tensor, torch.Tensor]]


class MiEstimate(BaseModel):
    lower_bound_nats: float
    upper_bound_nats: float
    batch_size: int = Field(ge=2)

    @model_validator(mode="after")
    def _infonce_cap(self):
        cap = math.log(self.batch_size)
        if self.lower_bound_nats > cap + 1e-9:
            raise ValueError(f"InfoNCE bound {self.lower_bound_nats} exceeds ln(B) = {cap}")
        return self


class BilinearCritic(torch.nn.Module):
    """score(g, x) = (W_g g)'(W_x x) / tau with bias-free projections."""

    def __init__(
        self,
        rep_dim: int,
        cond_dim: int,
        proj_dim: int,
        tau: float = 1.0,
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if tau <= 0:
            raise ValueError(f"tau must be positive, got {tau}")
        self.tau = tau
        self.w_g = torch.nn.Linear(rep_dim, proj_dim, bias=False, dtype=torch.float64)
        self.w_x = torch.nn.Linear(cond_dim, proj_dim, bias=False, dtype=torch.float64)
        with torch.no_grad():
            # nn.Linear's uniform fan-in init, drawn from an explicit generator
            for layer, fan_in in ((self.w_g, rep_dim), (self.w_x, cond_dim)):
                bound = 1.0 / math.sqrt(fan_in)
                weight = torch.rand(layer.weight.shape, generator=generator, dtype=torch.float64)
                layer.weight.copy_((2 * weight - 1) * bound)

    def embed(self, reps: torch.Tensor, conds: torch.Tensor):
        return self.w_g(reps), self.w_x(conds)

    def forward(self, reps: torch.Tensor, conds: torch.Tensor) -> torch.Tensor:
        """Full B x B score matrix, S[i, j] = score(reps[i], conds[j])."""
        g, x = self.embed(reps, conds)
        return g @ x.T / self.tau

    def pair_scores(self, reps: torch.Tensor, conds: torch.Tensor) -> torch.Tensor:
        """Raw row-aligned scores without temperature."""
        g, x = self.embed(reps, conds)
        return (g * x).sum(dim=1)


def infonce_loss(
    critic: BilinearCritic, reps: torch.Tensor, conds: torch.Tensor
) -> Tuple[torch.Tensor, float]:
    """In-batch InfoNCE; returns the loss tensor and the lower bound ln(B) - loss."""
    batch = reps.shape[0]
    if batch < 2:
        raise ValueError(f"InfoNCE needs at least 2 rows for negatives, got {batch}")
    if conds.shape[0] != batch:
        raise ValueError(f"rows not aligned: {batch} reps vs {conds.shape[0]} conditioners")
    scores = critic(reps, conds)
    loss = F.cross_entropy(scores, torch.arange(batch))
    return loss, math.log(batch) - loss.item()


def nce_club_estimate(
    critic: BilinearCritic,
    joint_reps: torch.Tensor,
    joint_conds: torch.Tensor,
    marginal_reps: torch.Tensor,
    marginal_conds: torch.Tensor,
) -> float:
    """Mean score of positive pairs minus mean score of product-of-marginals pairs."""
    with torch.no_grad():
        positive = critic.pair_scores(joint_reps, joint_conds).mean()
        negative = critic.pair_scores(marginal_reps, marginal_conds).mean()
    return (positive - negative).item()


def shuffled_marginals(
    reps: torch.Tensor, conds: torch.Tensor, generator: Optional[torch.Generator] = None
) -> Tuple[torch.Tensor, torch.Tensor]:
    perm = torch.randperm(conds.shape[0], generator=generator)
    return reps, conds[perm]


def train_critic(
    critic: BilinearCritic,
    sampler: PairSampler,
    steps: int,
    learning_rate: float,
    seed: int,
) -> BilinearCritic:
    """Fit a copy of the critic by maximising the InfoNCE lower bound.

    Raises TrainingDivergedError on a non-finite loss.
    """
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    critic = copy.deepcopy(critic)
    critic.train()
    generator = torch_generator(seed, "critic-batches")
    optimizer = torch.optim.Adam(
        critic.parameters(), lr=learning_rate, betas=(0.9, 0.999), eps=1e-8
    )
    for step in range(steps):
        reps, conds = sampler(generator)
        loss, lower = infonce_loss(critic, reps, conds)
        if not torch.isfinite(loss):
            raise TrainingDivergedError("critic", step, f"loss={loss.item()}")
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
        if step % 1000 == 0:
            logger.debug("critic step %d: lower bound %.4f", step, lower)
    critic.eval()
    return critic


def evaluate_bounds(
    critic: BilinearCritic, sampler: PairSampler, batches: int, seed: int
) -> MiEstimate:
    """Average InfoNCE lower bound and NCE-CLUB estimate over fresh batches."""
    generator = torch_generator(seed, "critic-eval")
    lower, upper, batch = 0.0, 0.0, 0
    for _ in range(batches):
        reps, conds = sampler(generator)
        with torch.no_grad():
            _, lb = infonce_loss(critic, reps, conds)
        lower += lb
        upper += nce_club_estimate(
            critic, reps, conds, *shuffled_marginals(reps, conds, generator)
        )
        batch = reps.shape[0]
    return MiEstimate(
        lower_bound_nats=lower / batches, upper_bound_nats=upper / batches, batch_size=batch
    )
