from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

SEED_BOUND = 2**64


class GaussianScmParams(BaseModel):
    """Coefficients and noise variances of the scalar Gaussian SCM.

    Z = eps_Z, T_C = alpha Z + eps_C, T_nC = beta Z + eps_N, Y = rho T_C + delta Z + eps_Y.
    """

    model_config = ConfigDict(frozen=True)

    alpha: float = 1.0
    beta: float = 1.0
    rho: float = 1.0
    delta: float = 1.0
    var_z: float = Field(default=1.0, gt=0)
    var_c: float = Field(default=1.0, gt=0)
    var_n: float = Field(default=1.0, gt=0)
    var_y: float = Field(default=1.0, gt=0)


class RepresentationKind(str, Enum):
    CAUSAL = "causal"
    NAIVE = "naive"
    COMPRESSED = "compressed"


class RepresentationSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: RepresentationKind
    var_g: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _only_compressed_has_noise(self):
        if self.kind != RepresentationKind.COMPRESSED and self.var_g != 0.0:
            raise ValueError(f"var_g is only meaningful for compressed, got {self.kind.value}")
        return self

    @classmethod
    def causal(cls) -> "RepresentationSpec":
        return cls(kind=RepresentationKind.CAUSAL)

    @classmethod
    def naive(cls) -> "RepresentationSpec":
        return cls(kind=RepresentationKind.NAIVE)

    @classmethod
    def compressed(cls, var_g: float) -> "RepresentationSpec":
        return cls(kind=RepresentationKind.COMPRESSED, var_g=var_g)

    @property
    def label(self) -> str:
        return self.kind.value


class LinearScmConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int = Field(default=10, ge=1)
    d_c: int = Field(default=5, ge=1)
    sigma_y: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _causal_dim_fits(self):
        if self.d_c > self.d:
            raise ValueError(f"d_c={self.d_c} exceeds d={self.d}")
        return self


class TrainConfig(BaseModel):
    # ===================== Logging =====================
    tracker_project_name: str = "CRLab Synthetic SCM"
    logger_type: Optional[str] = None
    log_freq: int = Field(default=500, ge=1)
    progress: bool = False

    # ===================== Critic =====================
    critic_proj_dim: int = Field(default=10, ge=1)
    critic_learning_rate: float = Field(default=1e-3, ge=0)
    tau: float = Field(default=1.0, gt=0)
    diagnostic_batches: int = Field(default=4, ge=1)

    # ===================== Train =====================
    learning_rate: float = Field(default=3e-4, gt=0)
    batch_size: int = Field(default=64, ge=2)
    epochs: int = Field(default=4000, ge=1)

    # ===================== GRL schedule =====================
    lambda_max: float = Field(default=0.5, ge=0)
    ramp_start: int = Field(default=200, ge=0)
    ramp_end: int = Field(default=1000, ge=0)
    ramp_shape: Literal["cubic"] = "cubic"

    seed: int = Field(default=0, ge=0, lt=SEED_BOUND)

    @model_validator(mode="after")
    def _ramp_inside_run(self):
        if not self.ramp_start <= self.ramp_end <= self.epochs:
            raise ValueError(
                f"need ramp_start <= ramp_end <= epochs, got "
                f"{self.ramp_start}, {self.ramp_end}, {self.epochs}"
            )
        return self


class SweepConfig(BaseModel):
    sigma_y_grid: List[float] = Field(default=[0.0, 0.25, 0.5, 0.75, 1.0], min_length=1)
    seeds: int = Field(default=50, ge=1)
    methods: List[Literal["baseline", "crl"]] = Field(
        default=["baseline", "crl"], min_length=1
    )
    scm: LinearScmConfig = LinearScmConfig()
    train: TrainConfig = TrainConfig()
    n_train: int = Field(default=1000, ge=2)
    n_val: int = Field(default=1000, ge=2)
    out: str = "results/sweep.csv"
    workers: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=SEED_BOUND)

    @model_validator(mode="after")
    def _grid_in_unit_interval(self):
        for s in self.sigma_y_grid:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"sigma_y grid values must lie in [0, 1], got {s}")
        return self

    @model_validator(mode="after")
    def _methods_unique(self):
        if len(set(self.methods)) != len(self.methods):
            raise ValueError(f"methods must not repeat, got {self.methods}")
        return self


class MiBenchConfig(BaseModel):
    correlations: List[float] = Field(default=[0.0, 0.5, 0.8, 0.95], min_length=1)
    dim: int = Field(default=1, ge=1)
    batch_size: int = Field(default=256, ge=2)
    steps: int = Field(default=10_000, ge=1)
    eval_batches: int = Field(default=100, ge=1)
    learning_rate: float = Field(default=1e-3, ge=0)
    proj_dim: int = Field(default=8, ge=1)
    tau: float = Field(default=1.0, gt=0)
    seed: int = Field(default=0, ge=0, lt=SEED_BOUND)
    out: str = "results/mi_bench.csv"

    @model_validator(mode="after")
    def _correlations_open_interval(self):
        for c in self.correlations:
            if not -1.0 < c < 1.0:
                raise ValueError(f"correlations must lie in (-1, 1), got {c}")
        return self


class AnalyticConfig(BaseModel):
    params: GaussianScmParams = GaussianScmParams()
    lambda_grid: List[float] = Field(
        default=[round(0.05 * i, 2) for i in range(101)], min_length=1
    )
    var_g_grid: List[float] = Field(default=[0.1, 0.5, 1.0, 2.0, 5.0], min_length=1)
    scm: LinearScmConfig = LinearScmConfig(sigma_y=1.0)
    out: str = "results/analytic.csv"
    leakage_out: Optional[str] = None

    @model_validator(mode="after")
    def _grids_nonnegative(self):
        if any(v < 0 for v in self.lambda_grid):
            raise ValueError("lambda grid must be nonnegative")
        if any(v < 0 for v in self.var_g_grid):
            raise ValueError("var_g grid must be nonnegative")
        return self


class TrainRunConfig(BaseModel):
    """A single training run on freshly sampled linear-SCM data."""

    train: TrainConfig = TrainConfig()
    scm: LinearScmConfig = LinearScmConfig()
    n_train: int = Field(default=1000, ge=2)
    n_val: int = Field(default=1000, ge=2)
    out: str = "results/run.json"
    data_out: Optional[str] = None
