from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np
import torch
from torch.utils.data import Dataset


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class NoiseRecord:
    """Exogenous treatment noise, T = X @ loading + eps * scale."""

    eps: np.ndarray
    loading: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eps", _frozen(self.eps))
        object.__setattr__(self, "loading", _frozen(self.loading))
        object.__setattr__(self, "scale", _frozen(self.scale))

    def structural(self, x: np.ndarray, columns: slice = slice(None)) -> np.ndarray:
        return x @ self.loading[:, columns]


class ScmDataset(Dataset):
    """Immutable sample of (X, T, Y) from a structural causal model.

    Columns ``[0, d_c)`` of T are causal, ``[d_c, d)`` non-causal. Items are
    dicts of float64 tensors, so the dataset plugs straight into a DataLoader;
    indexing with a list of rows returns a whole batch.
    """

    def __init__(
        self,
        x: np.ndarray,
        t: np.ndarray,
        y: np.ndarray,
        d_c: int,
        noise: Optional[NoiseRecord] = None,
        sigma_y: Optional[float] = None,
    ):
        super().__init__()
        self._x = _frozen(x)
        self._t = _frozen(t)
        self._y = _frozen(y)
        n = self._y.shape[0]
        if self._y.ndim != 1 or n < 1:
            raise ValueError(f"y must be a nonempty vector, got shape {self._y.shape}")
        if self._x.ndim != 2 or self._t.ndim != 2:
            raise ValueError("x and t must be matrices")
        if self._x.shape[0] != n or self._t.shape[0] != n:
            raise ValueError(
                f"row counts differ: x={self._x.shape[0]}, t={self._t.shape[0]}, y={n}"
            )
        if not 1 <= d_c <= self._t.shape[1]:
            raise ValueError(f"d_c={d_c} outside [1, {self._t.shape[1]}]")
        for name, array in (("x", self._x), ("t", self._t), ("y", self._y)):
            if not np.all(np.isfinite(array)):
                raise ValueError(f"{name} contains non-finite entries")
        if noise is not None and noise.eps.shape != self._t.shape:
            raise ValueError(f"noise record shape {noise.eps.shape} != t shape {self._t.shape}")
        self.d_c = d_c
        self.noise = noise
        self.sigma_y = sigma_y

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def t(self) -> np.ndarray:
        return self._t

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def n(self) -> int:
        return self._y.shape[0]

    @property
    def d(self) -> int:
        return self._t.shape[1]

    @property
    def t_causal(self) -> np.ndarray:
        return self._t[:, : self.d_c]

    @property
    def t_noncausal(self) -> np.ndarray:
        return self._t[:, self.d_c :]

    def replace(self, **arrays) -> "ScmDataset":
        fields = dict(x=self._x, t=self._t, y=self._y, d_c=self.d_c, noise=self.noise,
                      sigma_y=self.sigma_y)
        fields.update(arrays)
        return ScmDataset(**fields)

    def tensors(self) -> Dict[str, torch.Tensor]:
        return {"x": torch.tensor(self._x), "t": torch.tensor(self._t), "y": torch.tensor(self._y)}

    def __getitem__(self, idx: Union[int, Sequence[int]]) -> Dict[str, torch.Tensor]:
        idx = np.asarray(idx)
        return {
            "x": torch.tensor(self._x[idx]),
            "t": torch.tensor(self._t[idx]),
            "y": torch.tensor(self._y[idx]),
        }

    def __len__(self) -> int:
        return self.n
