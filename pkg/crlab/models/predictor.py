import math
from typing import List, Optional

import torch
from pydantic import BaseModel


class PredictorSnapshot(BaseModel):
    w_x: List[float]
    w_t: List[float]
    b: float


class LinearPredictor(torch.nn.Module):
    """y_hat = w_x'x + w_t't + b, with treatment representation h_T = t * w_t."""

    def __init__(self, x_dim: int, t_dim: int, generator: Optional[torch.Generator] = None):
        super().__init__()
        # nn.Linear's uniform fan-in init over the concatenated input [x, t]
        bound = 1.0 / math.sqrt(x_dim + t_dim)

        def uniform(*shape):
            return (2 * torch.rand(shape, generator=generator, dtype=torch.float64) - 1) * bound

        self.w_x = torch.nn.Parameter(uniform(x_dim))
        self.w_t = torch.nn.Parameter(uniform(t_dim))
        self.b = torch.nn.Parameter(uniform(1)[0].clone())

    def forward(self, x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return x @ self.w_x + t @ self.w_t + self.b

    def representation(self, t: torch.Tensor) -> torch.Tensor:
        return t * self.w_t

    def snapshot(self) -> PredictorSnapshot:
        return PredictorSnapshot(
            w_x=self.w_x.detach().tolist(), w_t=self.w_t.detach().tolist(), b=self.b.item()
        )

    @classmethod
    def from_weights(cls, w_x, w_t, b: float = 0.0) -> "LinearPredictor":
        w_x = torch.as_tensor(w_x, dtype=torch.float64)
        w_t = torch.as_tensor(w_t, dtype=torch.float64)
        model = cls(w_x.shape[0], w_t.shape[0])
        with torch.no_grad():
            model.w_x.copy_(w_x)
            model.w_t.copy_(w_t)
            model.b.fill_(b)
        return model

    @classmethod
    def from_snapshot(cls, snapshot: PredictorSnapshot) -> "LinearPredictor":
        return cls.from_weights(snapshot.w_x, snapshot.w_t, snapshot.b)
