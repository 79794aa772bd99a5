"""Exact mutual information over small finite joint distributions.

A ``DiscreteJoint`` is a table p[a, b, c]. Used as a brute-force oracle for the
purification identity J(s(G)) - J(G) = lambda I(G; Z | s(G)).
"""
from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.special import entr

MAX_ALPHABET = 16
SUM_TOL = 1e-12


class MiKind(str, Enum):
    I_AB = "I_AB"
    I_AB_GIVEN_C = "I_AB_given_C"


class DiscreteJoint(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    table: np.ndarray

    @field_validator("table", mode="before")
    @classmethod
    def _valid_table(cls, value):
        table = np.array(value, dtype=np.float64, copy=True)
        if table.ndim == 2:
            table = table[:, :, None]
        if table.ndim != 3:
            raise ValueError(f"table must have 2 or 3 axes, got {table.ndim}")
        if any(s < 1 or s > MAX_ALPHABET for s in table.shape):
            raise ValueError(f"alphabet sizes must lie in [1, {MAX_ALPHABET}], got {table.shape}")
        if not np.all(np.isfinite(table)) or np.any(table < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        total = table.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        table.flags.writeable = False
        return table

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.table.shape

    def permute(self, order: Sequence[int]) -> "DiscreteJoint":
        return DiscreteJoint(table=np.transpose(self.table, order))

    def coarsen(self, mapping: Sequence[int], axis: int = 0) -> "DiscreteJoint":
        """Push the distribution through a deterministic map on one axis."""
        mapping = np.asarray(mapping)
        if mapping.shape != (self.table.shape[axis],):
            raise ValueError("mapping must assign a value to every symbol of the axis")
        moved = np.moveaxis(self.table, axis, 0)
        out = np.zeros((int(mapping.max()) + 1,) + moved.shape[1:])
        np.add.at(out, mapping, moved)
        return DiscreteJoint(table=np.moveaxis(out, 0, axis))


def _entropy(table: np.ndarray, keep: Tuple[int, ...]) -> float:
    drop = tuple(i for i in range(table.ndim) if i not in keep)
    return float(entr(table.sum(axis=drop)).sum())


def discrete_mi(joint: DiscreteJoint, which: MiKind = MiKind.I_AB) -> float:
    p = joint.table
    if MiKind(which) == MiKind.I_AB:
        return _entropy(p, (0,)) + _entropy(p, (1,)) - _entropy(p, (0, 1))
    return _entropy(p, (0, 2)) + _entropy(p, (1, 2)) - _entropy(p, (0, 1, 2)) - _entropy(p, (2,))


def discrete_j(joint_gyz: DiscreteJoint, lam: float) -> float:
    """J = I(G; Y | Z) - lambda I(G; Z) for a joint over (G, Y, Z)."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    util = discrete_mi(joint_gyz, MiKind.I_AB_GIVEN_C)
    pen = discrete_mi(joint_gyz.permute((0, 2, 1)), MiKind.I_AB)
    return util - lam * pen


def purification_gap(joint_gyz: DiscreteJoint, mapping: Sequence[int]) -> float:
    """I(G; Z | s(G)) for the joint over (G, Y, Z) and coarsening s."""
    p = joint_gyz.table
    mapping = np.asarray(mapping)
    p_gz = p.sum(axis=1)
    lifted = np.zeros((p.shape[0], p.shape[2], int(mapping.max()) + 1))
    lifted[np.arange(p.shape[0]), :, mapping] = p_gz
    return discrete_mi(DiscreteJoint(table=lifted), MiKind.I_AB_GIVEN_C)


def random_purifiable_joint(
    rng: np.random.Generator,
    n_gbar: int,
    fiber: int,
    n_y: int,
    n_z: int,
) -> Tuple[DiscreteJoint, np.ndarray]:
    """Joint over (G, Y, Z) with coarsening s such that I(G; Y | s(G), Z) = 0.

    p(g, y, z) = p(z) p(gbar | z) p(g | gbar, z) p(y | gbar, z) with gbar = s(g);
    G refines Gbar into ``fiber`` symbols whose choice depends on Z but not on Y.
    """
    n_g = n_gbar * fiber
    mapping = np.repeat(np.arange(n_gbar), fiber)
    p_z = rng.dirichlet(np.ones(n_z))
    p_gbar_z = rng.dirichlet(np.ones(n_gbar), size=n_z)  # [z, gbar]
    p_fiber = rng.dirichlet(np.ones(fiber), size=(n_gbar, n_z))  # [gbar, z, f]
    p_y = rng.dirichlet(np.ones(n_y), size=(n_gbar, n_z))  # [gbar, z, y]

    table = np.zeros((n_g, n_y, n_z))
    for g in range(n_g):
        gbar, f = divmod(g, fiber)
        weight = p_z * p_gbar_z[:, gbar] * p_fiber[gbar, :, f]  # [z]
        table[g] = p_y[gbar].T * weight[None, :]
    table /= table.sum()
    return DiscreteJoint(table=table), mapping
