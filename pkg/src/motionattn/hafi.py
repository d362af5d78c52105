"""Hierarchical attentive refinement of each frame from its neighbors.

Each frame's feature is rebuilt from a window of k*k surrounding frames
(replicate-clamped at the sequence edges). The window is partitioned in
temporal order into k non-overlapping groups of k frames. Within a group, the
k features are resized by a shared affine layer, concatenated, scored by a
shared three-layer attention MLP with a final softmax, and averaged under
those weights; the k group outputs are then combined the same way one level
up. Every refined feature is therefore a convex combination of its window.

``hafi_refine_all`` runs the same computation for all frames at once by
stacking windows into block rows; it is exactly equal to looping
``hafi_refine`` over t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor import (
    Tensor,
    linear,
    relu,
    reshape,
    row_block_matmul,
    softmax_rows,
    take_rows,
)

# widths of the shared attention MLP (k * resized -> 256 -> 64 -> k)
ATTN_HIDDEN = (256, 64)


@dataclass
class HafiConfig:
    frames_per_group: int = 3
    resize_channels: int = 8

    def __post_init__(self):
        if self.frames_per_group not in (2, 3, 4):
            raise ShapeError(
                f"frames_per_group must be 2, 3, or 4, got {self.frames_per_group}"
            )
        if self.resize_channels < 1:
            raise ShapeError("resize_channels must be positive")

    @property
    def window(self) -> int:
        return self.frames_per_group**2


@dataclass
class HafiWeights:
    """One shared resize layer plus one shared attention MLP.

    Both hierarchy levels and all branches reuse the same weights, so the
    parameter count is independent of the window size.
    """

    resize_w: Tensor
    resize_b: Tensor
    mlp_w1: Tensor
    mlp_b1: Tensor
    mlp_w2: Tensor
    mlp_b2: Tensor
    mlp_w3: Tensor
    mlp_b3: Tensor

    @classmethod
    def init(cls, channels: int, cfg: HafiConfig, seed: int) -> "HafiWeights":
        rng = np.random.default_rng(seed)
        k, cr = cfg.frames_per_group, cfg.resize_channels
        h1, h2 = ATTN_HIDDEN

        def layer(n_in, n_out, name):
            bound = 1.0 / np.sqrt(n_in)
            w = Tensor(rng.uniform(-bound, bound, (n_in, n_out)), name=f"{name}_w")
            b = Tensor(np.zeros(n_out), name=f"{name}_b")
            return w, b

        resize_w, resize_b = layer(channels, cr, "resize")
        w1, b1 = layer(k * cr, h1, "mlp1")
        w2, b2 = layer(h1, h2, "mlp2")
        w3, b3 = layer(h2, k, "mlp3")
        return cls(resize_w, resize_b, w1, b1, w2, b2, w3, b3)

    @property
    def frames_per_group(self) -> int:
        return self.mlp_w3.dims[1]

    @property
    def channels(self) -> int:
        return self.resize_w.dims[0]

    def parameters(self) -> dict[str, Tensor]:
        return {
            "resize_w": self.resize_w,
            "resize_b": self.resize_b,
            "mlp_w1": self.mlp_w1,
            "mlp_b1": self.mlp_b1,
            "mlp_w2": self.mlp_w2,
            "mlp_b2": self.mlp_b2,
            "mlp_w3": self.mlp_w3,
            "mlp_b3": self.mlp_b3,
        }


def window_indices(t: int, seq_len: int, k: int) -> np.ndarray:
    """The k*k window around frame t, replicate-clamped to [0, seq_len).

    Odd k centers the window on t; even k takes one extra future frame.
    """
    span = k * k
    if k % 2 == 1:
        lo = t - (span - 1) // 2
    else:
        lo = t - (span // 2 - 1)
    return np.clip(np.arange(lo, lo + span), 0, seq_len - 1)


def _attention_weights(w: HafiWeights, flat: Tensor) -> Tensor:
    h = relu(linear(flat, w.mlp_w1, w.mlp_b1))
    h = relu(linear(h, w.mlp_w2, w.mlp_b2))
    return softmax_rows(linear(h, w.mlp_w3, w.mlp_b3))


def _attend_blocks(w: HafiWeights, feats: Tensor, groups: int, k: int):
    """Attend over each consecutive block of k rows of ``feats``.

    Returns (aggregated (groups, C), attention (groups, k)). The attention
    weights are computed from resized features, but average the originals.
    """
    cr = w.resize_w.dims[1]
    resized = linear(feats, w.resize_w, w.resize_b)
    flat = reshape(resized, (groups, k * cr))
    attn = _attention_weights(w, flat)
    return row_block_matmul(attn, feats), attn


def group_attend(group: Tensor, w: HafiWeights) -> tuple[Tensor, Tensor]:
    """Attentively average one group of k frame features.

    ``group`` is (k, C); returns the aggregated feature (C,) and the
    attention vector (k,), which sums to 1.
    """
    k = w.frames_per_group
    if group.data.ndim != 2 or group.dims[0] != k:
        raise ShapeError(f"group_attend: ({k}, C) group expected, got {group.dims}")
    if group.dims[1] != w.channels:
        raise ShapeError(
            f"group_attend: feature width {group.dims[1]} != weights width {w.channels}"
        )
    agg, attn = _attend_blocks(w, group, 1, k)
    return reshape(agg, (group.dims[1],)), reshape(attn, (k,))


def hafi_refine(z: Tensor, t: int, w: HafiWeights, cfg: HafiConfig) -> Tensor:
    """Refine frame t of a (T, C) sequence; returns the (C,) refined feature."""
    if z.data.ndim != 2 or z.dims[0] < 1:
        raise ShapeError(f"hafi_refine: nonempty (T, C) sequence expected, got {z.dims}")
    seq_len = z.dims[0]
    if not 0 <= t < seq_len:
        raise ShapeError(f"hafi_refine: frame {t} out of range for length {seq_len}")
    k = cfg.frames_per_group
    win = take_rows(z, window_indices(t, seq_len, k))
    bottom, _ = _attend_blocks(w, win, k, k)
    top, _ = _attend_blocks(w, bottom, 1, k)
    return reshape(top, (z.dims[1],))


def hafi_refine_all(z: Tensor, w: HafiWeights, cfg: HafiConfig) -> Tensor:
    """Refine every frame; returns a (T, C) sequence.

    Equivalent to stacking ``hafi_refine(z, t, ...)`` over all t, but both
    hierarchy levels run as single batched ops over all windows.
    """
    if z.data.ndim != 2 or z.dims[0] < 1:
        raise ShapeError(f"hafi_refine_all: nonempty (T, C) sequence expected, got {z.dims}")
    seq_len = z.dims[0]
    k = cfg.frames_per_group
    idx = np.concatenate([window_indices(t, seq_len, k) for t in range(seq_len)])
    win = take_rows(z, idx)
    bottom, _ = _attend_blocks(w, win, seq_len * k, k)
    top, _ = _attend_blocks(w, bottom, seq_len, k)
    return top
