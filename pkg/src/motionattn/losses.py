"""Training losses: weighted L2 supervision plus a least-squares
adversarial term on pose sequences.

The supervised loss is a weighted sum of mean-squared errors over body
parameters, 3D joints, and projected 2D joints; the reduction is the mean
over all elements so values are stable under shape changes. The adversarial
pair follows the least-squares formulation: the generator drives
discriminator scores on its outputs toward 1, while the discriminator pushes
real sequences toward 1 and generated ones toward 0. Inside the
discriminator objective the generated poses are detached, so each side's
gradients stay in its own parameter partition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeError
from .tensor import (
    Tensor,
    add,
    concat_rows,
    detach,
    linear,
    mean_all,
    mse,
    mul,
    relu,
    reshape,
    scale,
    shift,
)


@dataclass
class LossWeights:
    w_params: float = 1.0
    w_3d: float = 1.0
    w_2d: float = 1.0
    w_adv: float = 1.0

    def __post_init__(self):
        for name in ("w_params", "w_3d", "w_2d", "w_adv"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ShapeError(f"loss weight {name} must be finite and nonnegative")


def loss_supervised(
    pred_theta: Tensor,
    pred_joints3d: Tensor,
    pred_joints2d: Tensor,
    gt_theta: Tensor,
    gt_joints3d: Tensor,
    gt_joints2d: Tensor,
    lw: LossWeights,
) -> tuple[Tensor, dict[str, float]]:
    """Weighted parameter/3D/2D supervision for one sequence.

    Returns the scalar loss and a breakdown of the raw (unweighted) terms.
    """
    pairs = {
        "params": (pred_theta, gt_theta),
        "joints3d": (pred_joints3d, gt_joints3d),
        "joints2d": (pred_joints2d, gt_joints2d),
    }
    for name, (pred, gt) in pairs.items():
        if pred.dims != gt.dims:
            raise ShapeError(f"loss_supervised: {name} shapes differ, {pred.dims} vs {gt.dims}")
    terms = {name: mse(pred, gt) for name, (pred, gt) in pairs.items()}
    total = add(
        add(scale(terms["params"], lw.w_params), scale(terms["joints3d"], lw.w_3d)),
        scale(terms["joints2d"], lw.w_2d),
    )
    breakdown = {name: term.item() for name, term in terms.items()}
    return total, breakdown


@dataclass
class DiscriminatorWeights:
    """Affine stack scoring a flattened pose sequence: T*72 -> 1024 -> 256 -> 1."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    w3: Tensor
    b3: Tensor

    @classmethod
    def init(
        cls, input_dim: int, seed: int, hidden: tuple[int, int] = (1024, 256)
    ) -> "DiscriminatorWeights":
        rng = np.random.default_rng(seed)
        h1, h2 = hidden

        def layer(a, b, name):
            bound = 1.0 / np.sqrt(a)
            return (
                Tensor(rng.uniform(-bound, bound, (a, b)), name=f"{name}_w"),
                Tensor(np.zeros(b), name=f"{name}_b"),
            )

        w1, b1 = layer(input_dim, h1, "disc1")
        w2, b2 = layer(h1, h2, "disc2")
        w3, b3 = layer(h2, 1, "disc3")
        return cls(w1, b1, w2, b2, w3, b3)

    @property
    def input_dim(self) -> int:
        return self.w1.dims[0]

    def parameters(self) -> dict[str, Tensor]:
        return {
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": self.b2,
            "w3": self.w3,
            "b3": self.b3,
        }


def discriminator_scores(disc: DiscriminatorWeights, poses: Sequence[Tensor]) -> Tensor:
    """Scores for a batch of (T, 72) pose sequences, as a (B, 1) column."""
    if not poses:
        raise ShapeError("discriminator_scores: empty batch")
    rows = []
    for p in poses:
        if p.data.ndim != 2 or p.size != disc.input_dim:
            raise ShapeError(
                f"discriminator_scores: pose sequence of {disc.input_dim} values expected, got {p.dims}"
            )
        rows.append(reshape(p, (1, disc.input_dim)))
    x = concat_rows(rows)
    h = relu(linear(x, disc.w1, disc.b1))
    h = relu(linear(h, disc.w2, disc.b2))
    return linear(h, disc.w3, disc.b3)


def adversarial_losses(
    disc: DiscriminatorWeights,
    real_poses: Sequence[Tensor],
    fake_poses: Sequence[Tensor],
) -> tuple[Tensor, Tensor]:
    """Least-squares adversarial pair (generator loss, discriminator loss).

    gen  = E[(D(fake) - 1)^2]
    disc = E[(D(real) - 1)^2] + E[D(fake)^2], with fakes detached so the
    discriminator objective cannot reach generator parameters.
    """
    if not real_poses or not fake_poses:
        raise ShapeError("adversarial_losses: batches must be nonempty")
    s_fake = discriminator_scores(disc, fake_poses)
    gen_loss = mean_all(_squared(shift(s_fake, -1.0)))

    s_fake_const = discriminator_scores(disc, [detach(p) for p in fake_poses])
    s_real = discriminator_scores(disc, real_poses)
    disc_loss = add(
        mean_all(_squared(shift(s_real, -1.0))),
        mean_all(_squared(s_fake_const)),
    )
    return gen_loss, disc_loss


def _squared(t: Tensor) -> Tensor:
    return mul(t, t)
