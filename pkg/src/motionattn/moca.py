"""Temporal attention with a self-similarity prior over a feature sequence.

Two T x T row-stochastic maps are computed from a (T, C) sequence: a
normalized self-similarity map taken directly on the raw features, and a
learned pairwise attention map computed in a reduced-channel projection
space. A learned per-entry affine blend of the two (a 1x1 recalibration,
re-normalized row-wise) gives the final aggregation map. Aggregated values
re-enter through a residual connection, so zero output weights leave the
input sequence untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ShapeError
from .tensor import (
    Tensor,
    add,
    detach,
    index_entry,
    linear,
    matmul,
    scale_by,
    shift_by,
    softmax_rows,
    transpose,
)


class AttentionMode(Enum):
    """Which map drives value aggregation (the ablation switch)."""

    MOCA = "MOCA"
    NONLOCAL_ONLY = "NONLOCAL_ONLY"
    NSSM_ONLY = "NSSM_ONLY"


@dataclass
class MocaConfig:
    channels: int = 64
    reduction: int = 2
    mode: AttentionMode = AttentionMode.MOCA
    # the similarity branch is differentiated through by default; flip to
    # treat the raw features as a constant prior
    detach_nssm: bool = False

    def __post_init__(self):
        if self.channels < 1 or self.reduction < 1:
            raise ShapeError("channels and reduction must be positive")
        if self.channels % self.reduction != 0:
            raise ShapeError(
                f"channels {self.channels} not divisible by reduction {self.reduction}"
            )

    @property
    def inner_channels(self) -> int:
        return self.channels // self.reduction


@dataclass
class MocaWeights:
    """Projection weights and the 2 -> 1 map-recalibration parameters."""

    w_theta: Tensor
    w_phi: Tensor
    w_g: Tensor
    w_z: Tensor
    b_z: Tensor
    rho_w: Tensor  # blend weights for (similarity map, attention map)
    rho_b: Tensor

    @classmethod
    def init(cls, cfg: MocaConfig, seed: int) -> "MocaWeights":
        """Seeded init: projections uniform in +-1/sqrt(C), output weights
        zero so the module starts as the identity, blend at (0.5, 0.5)."""
        rng = np.random.default_rng(seed)
        c, d = cfg.channels, cfg.inner_channels
        bound = 1.0 / np.sqrt(c)

        def u(shape, name):
            return Tensor(rng.uniform(-bound, bound, shape), name=name)

        return cls(
            w_theta=u((c, d), "w_theta"),
            w_phi=u((c, d), "w_phi"),
            w_g=u((c, d), "w_g"),
            w_z=Tensor(np.zeros((d, c)), name="w_z"),
            b_z=Tensor(np.zeros(c), name="b_z"),
            rho_w=Tensor(np.array([0.5, 0.5]), name="rho_w"),
            rho_b=Tensor(np.array(0.0), name="rho_b"),
        )

    def parameters(self) -> dict[str, Tensor]:
        return {
            "w_theta": self.w_theta,
            "w_phi": self.w_phi,
            "w_g": self.w_g,
            "w_z": self.w_z,
            "b_z": self.b_z,
            "rho_w": self.rho_w,
            "rho_b": self.rho_b,
        }


def nssm(x: Tensor) -> Tensor:
    """Normalized self-similarity map: row softmax of X X^T.

    The pre-softmax logit matrix is symmetric; the output is row-stochastic.
    """
    if x.data.ndim != 2 or x.dims[0] < 1:
        raise ShapeError(f"nssm: (T, C) sequence expected, got {x.dims}")
    return softmax_rows(matmul(x, transpose(x)))


def pairwise_attention(x: Tensor, w: MocaWeights) -> Tensor:
    """Learned attention map: row softmax of theta(X) phi(X)^T."""
    if x.data.ndim != 2:
        raise ShapeError(f"pairwise_attention: (T, C) sequence expected, got {x.dims}")
    q = linear(x, w.w_theta)
    k = linear(x, w.w_phi)
    return softmax_rows(matmul(q, transpose(k)))


def fuse_maps(nssm_map: Tensor, attn_map: Tensor, rho_w: Tensor, rho_b: Tensor) -> Tensor:
    """Blend two row-stochastic maps into one.

    Per entry, logit = rho_w[0] * similarity + rho_w[1] * attention + rho_b
    (the 1x1-recalibration semantics over the two stacked maps), then a row
    softmax restores row-stochasticity.
    """
    if nssm_map.data.ndim != 2 or nssm_map.dims != attn_map.dims:
        raise ShapeError(f"fuse_maps: map shapes differ, {nssm_map.dims} vs {attn_map.dims}")
    blended = add(
        scale_by(nssm_map, index_entry(rho_w, 0)),
        scale_by(attn_map, index_entry(rho_w, 1)),
    )
    return softmax_rows(shift_by(blended, rho_b))


def attention_maps(x: Tensor, w: MocaWeights, cfg: MocaConfig) -> dict[str, Tensor]:
    """All three maps for a sequence: ``nssm``, ``attention``, ``moca``."""
    sim_in = detach(x) if cfg.detach_nssm else x
    sim = nssm(sim_in)
    attn = pairwise_attention(x, w)
    fused = fuse_maps(sim, attn, w.rho_w, w.rho_b)
    return {"nssm": sim, "attention": attn, "moca": fused}


def _select_map(x: Tensor, w: MocaWeights, cfg: MocaConfig) -> Tensor:
    if cfg.mode is AttentionMode.NSSM_ONLY:
        return nssm(detach(x) if cfg.detach_nssm else x)
    if cfg.mode is AttentionMode.NONLOCAL_ONLY:
        return pairwise_attention(x, w)
    sim = nssm(detach(x) if cfg.detach_nssm else x)
    return fuse_maps(sim, pairwise_attention(x, w), w.rho_w, w.rho_b)


def moca_forward(x: Tensor, w: MocaWeights, cfg: MocaConfig) -> Tensor:
    """Aggregate values under the configured map and add the residual.

    Z = M g(X) W_z + b_z + X, where M is the similarity map, the learned
    attention map, or their fusion depending on ``cfg.mode``.
    """
    if x.data.ndim != 2 or x.dims[1] != cfg.channels:
        raise ShapeError(
            f"moca_forward: (T, {cfg.channels}) sequence expected, got {x.dims}"
        )
    m = _select_map(x, w, cfg)
    y = matmul(m, linear(x, w.w_g))
    return add(linear(y, w.w_z, w.b_z), x)
