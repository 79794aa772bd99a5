import logging
import math
from typing import Dict, Iterator, List, Optional, Tuple

import torch
import torch.nn.functional as F
from pydantic import BaseModel, model_validator
from tqdm.auto import tqdm

from crlab.data.configs import TrainConfig, TrainRunConfig
from crlab.data.dataset import ScmDataset
from crlab.data.process import dataset_to_csv
from crlab.data.rng import derive_seed, torch_generator
from crlab.data.scm import sample_linear_scm
from crlab.errors import TrainingDivergedError
from crlab.models.critic import (
    BilinearCritic,
    infonce_loss,
    nce_club_estimate,
    shuffled_marginals,
)
from crlab.models.model import grad_reverse
from crlab.models.predictor import LinearPredictor, PredictorSnapshot
from crlab.scripts.predict import evaluate_mae, intervention_sensitivity

logger = logging.getLogger(__name__)


class RunResult(BaseModel):
    seed: int
    sigma_y: Optional[float] = None
    lambda_max: float
    mae: float
    sensitivity: float
    trace_lower: List[float]
    trace_upper: List[float]
    predictor: PredictorSnapshot

    @model_validator(mode="after")
    def _trace_finite(self):
        if len(self.trace_lower) != len(self.trace_upper):
            raise ValueError("diagnostic traces differ in length")
        values = self.trace_lower + self.trace_upper + [self.mae, self.sensitivity]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("run result contains non-finite entries")
        return self


def grl_schedule(epoch: int, config: TrainConfig) -> float:
    """0 before the ramp, cubic rise to lambda_max over the ramp, flat afterwards."""
    if epoch < 0:
        raise ValueError(f"epoch must be nonnegative, got {epoch}")
    if epoch >= config.ramp_end:
        return config.lambda_max
    if epoch < config.ramp_start:
        return 0.0
    progress = (epoch - config.ramp_start) / (config.ramp_end - config.ramp_start)
    return config.lambda_max * progress**3


def step_losses(
    model: LinearPredictor,
    critic: BilinearCritic,
    batch: Dict[str, torch.Tensor],
    lam: float,
) -> Tuple[torch.Tensor, torch.Tensor, float]:
    """MSE of the outcome and the InfoNCE loss between h_T (behind a GRL) and X.

    Backpropagating ``mse + infonce`` trains the critic to minimise the InfoNCE
    loss while the predictor's w_t receives ``-lam`` times its gradient.
    """
    y_hat = model(batch["x"], batch["t"])
    mse = F.mse_loss(y_hat, batch["y"])
    reps = grad_reverse(model.representation(batch["t"]), lam)
    nce, lower = infonce_loss(critic, reps, batch["x"])
    return mse, nce, lower


def epoch_batches(
    tensors: Dict[str, torch.Tensor], batch_size: int, generator: torch.Generator
) -> Iterator[Dict[str, torch.Tensor]]:
    """One shuffled pass over pre-converted tensors, last batch possibly short."""
    n = tensors["y"].shape[0]
    order = torch.randperm(n, generator=generator)
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        yield {key: value[idx] for key, value in tensors.items()}


def diagnose(
    model: LinearPredictor,
    critic: BilinearCritic,
    tensors: Dict[str, torch.Tensor],
    batch_size: int,
    batches: int,
    generator: torch.Generator,
) -> Tuple[float, float]:
    """InfoNCE lower bound and NCE-CLUB estimate on I(h_T; X), averaged over batches."""
    n = min(tensors["y"].shape[0], batch_size * batches)
    lower, upper, count = 0.0, 0.0, 0
    with torch.no_grad():
        for start in range(0, n, batch_size):
            x = tensors["x"][start : start + batch_size]
            h = model.representation(tensors["t"][start : start + batch_size])
            if h.shape[0] < 2:
                break
            _, lb = infonce_loss(critic, h, x)
            lower += lb
            upper += nce_club_estimate(critic, h, x, *shuffled_marginals(h, x, generator))
            count += 1
    return lower / count, upper / count


def _check_finite(epoch: int, **values: torch.Tensor) -> None:
    bad = {k: v for k, v in values.items() if not torch.all(torch.isfinite(v))}
    if bad:
        detail = ", ".join(f"{k}={v.detach().tolist()}" for k, v in bad.items())
        raise TrainingDivergedError("train", epoch, f"non-finite {detail}")


def _make_tracker(cfg: TrainConfig):
    if cfg.logger_type is None:
        return None
    from accelerate import Accelerator

    accelerator = Accelerator(log_with=cfg.logger_type, cpu=True)
    accelerator.init_trackers(cfg.tracker_project_name, config=cfg.model_dump())
    return accelerator


def train(
    cfg: TrainConfig, data: ScmDataset, validation: Optional[ScmDataset] = None
) -> RunResult:
    """Mini-batch training of the linear predictor with the adversarial MI penalty.

    Metrics and the per-epoch diagnostic trace are computed on ``validation``
    when given, otherwise on ``data``. Deterministic per (cfg, data).
    """
    if data.n < 2:
        raise ValueError(f"training needs at least 2 rows, got {data.n}")
    evaluation = validation if validation is not None else data
    if evaluation.n < 2:
        raise ValueError(f"diagnostics need at least 2 evaluation rows, got {evaluation.n}")
    if evaluation.d != data.d or evaluation.x.shape[1] != data.x.shape[1]:
        raise ValueError("validation data dimensions differ from training data")

    model = LinearPredictor(data.x.shape[1], data.d, generator=torch_generator(cfg.seed, "predictor"))
    critic = BilinearCritic(
        rep_dim=data.d,
        cond_dim=data.x.shape[1],
        proj_dim=cfg.critic_proj_dim,
        tau=cfg.tau,
        generator=torch_generator(cfg.seed, "critic"),
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate, betas=(0.9, 0.999), eps=1e-8)
    optimizer_critic = torch.optim.Adam(
        critic.parameters(), lr=cfg.critic_learning_rate, betas=(0.9, 0.999), eps=1e-8
    )

    train_tensors = data.tensors()
    eval_tensors = evaluation.tensors()
    batch_generator = torch_generator(cfg.seed, "batches")
    diag_generator = torch_generator(cfg.seed, "diagnostics")
    accelerator = _make_tracker(cfg)

    trace_lower, trace_upper = [], []
    progress_bar = tqdm(range(cfg.epochs), desc="Epochs", disable=not cfg.progress)
    for epoch in progress_bar:
        lam = grl_schedule(epoch, cfg)
        model.train()
        critic.train()
        for batch in epoch_batches(train_tensors, cfg.batch_size, batch_generator):
            if batch["y"].shape[0] < 2:
                continue
            mse, nce, _ = step_losses(model, critic, batch, lam)
            loss = mse + nce
            _check_finite(epoch, loss=loss.detach())

            optimizer.zero_grad(set_to_none=True)
            optimizer_critic.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            optimizer_critic.step()

        _check_finite(epoch, w_x=model.w_x, w_t=model.w_t, b=model.b)
        model.eval()
        critic.eval()
        lower, upper = diagnose(
            model, critic, eval_tensors, cfg.batch_size, cfg.diagnostic_batches, diag_generator
        )
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise TrainingDivergedError("train", epoch, f"diagnostics lower={lower}, upper={upper}")
        trace_lower.append(lower)
        trace_upper.append(upper)

        logs = {"lambda": lam, "mse": mse.item(), "infonce_lower": lower, "nce_club": upper}
        progress_bar.set_postfix(**logs)
        if accelerator is not None:
            accelerator.log(logs, step=epoch)
        if epoch % cfg.log_freq == 0 or epoch == cfg.epochs - 1:
            logger.info(
                "epoch %d: lambda=%.4f mse=%.5f infonce=%.4f nce_club=%.4f",
                epoch, lam, mse.item(), lower, upper,
            )

    if accelerator is not None:
        accelerator.end_training()

    return RunResult(
        seed=cfg.seed,
        sigma_y=data.sigma_y,
        lambda_max=cfg.lambda_max,
        mae=evaluate_mae(model, evaluation),
        sensitivity=intervention_sensitivity(model, evaluation, cfg.seed),
        trace_lower=trace_lower,
        trace_upper=trace_upper,
        predictor=model.snapshot(),
    )


def main(cfg: TrainRunConfig) -> RunResult:
    seed = cfg.train.seed
    data = sample_linear_scm(cfg.scm, cfg.n_train, derive_seed(seed, "train-data"))
    validation = sample_linear_scm(cfg.scm, cfg.n_val, derive_seed(seed, "validation-data"))
    if cfg.data_out:
        logger.info("training data written to %s", dataset_to_csv(data, cfg.data_out))
    return train(cfg.train, data, validation)
