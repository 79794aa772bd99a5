import torch

from crlab.data.dataset import ScmDataset
from crlab.data.scm import intervene_noncausal
from crlab.models.predictor import LinearPredictor


def _check_dims(model: LinearPredictor, data: ScmDataset) -> None:
    if model.w_x.shape[0] != data.x.shape[1] or model.w_t.shape[0] != data.d:
        raise ValueError(
            f"model expects x/t dims {model.w_x.shape[0]}/{model.w_t.shape[0]}, "
            f"data has {data.x.shape[1]}/{data.d}"
        )


def predict(model: LinearPredictor, data: ScmDataset) -> torch.Tensor:
    _check_dims(model, data)
    batch = data.tensors()
    with torch.no_grad():
        return model(batch["x"], batch["t"])


def evaluate_mae(model: LinearPredictor, data: ScmDataset) -> float:
    y_hat = predict(model, data)
    return (y_hat - torch.tensor(data.y)).abs().mean().item()


def intervention_sensitivity(model: LinearPredictor, data: ScmDataset, seed: int) -> float:
    """Mean |y_hat(T) - y_hat(T')| where T' resamples the non-causal noise.

    For the linear predictor the difference is w_t'(T' - T); the causal columns
    of T' - T are exactly zero.
    """
    _check_dims(model, data)
    shifted = intervene_noncausal(data, seed)
    delta = torch.tensor(shifted.t - data.t)
    with torch.no_grad():
        return (delta @ model.w_t).abs().mean().item()
