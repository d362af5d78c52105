"""Parameter accounting per module, computed from actually constructed
weights so the counts can never drift from the implementation.

``full_scale`` swaps in the reference-scale shapes (2048 channels, 256
resize channels, 1024-wide regressor) and adds a fixed constant for the
frozen convolutional backbone, making the total comparable with published
full-scale parameter budgets.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .config import ModelSettings
from .hafi import HafiConfig, HafiWeights
from .losses import DiscriminatorWeights
from .moca import MocaConfig, MocaWeights
from .regressor import POSE_DIM, RegressorWeights

# standard 50-layer residual ImageNet backbone (1000-way head); stands in
# for the fixed feature extractor when comparing at full scale
BACKBONE_PARAMS = 25_557_032

FULL_SCALE = ModelSettings(
    channels=2048,
    seq_len=16,
    reduction_ratio=2,
    frames_per_group=3,
    resize_channels=256,
    n_iter=3,
)

ASSUMPTIONS = (
    "attention projections (theta/phi/g) carry no biases; the output weights carry one",
    "map recalibration is a per-entry 2->1 affine with bias (3 parameters)",
    "resize layer and attention MLP are shared across branches and levels; MLP widths 256 and 64, with biases",
    "regressor input is channels+85, hidden widths 1024x1024; the mean estimate counts as a parameter",
    f"discriminator (T*{POSE_DIM} -> 1024 -> 256 -> 1) is train-time only and excluded from the model total",
    f"full-scale totals add a fixed backbone constant of {BACKBONE_PARAMS:,} for the frozen feature extractor",
)


@dataclass
class CountReport:
    modules: dict[str, int]
    model_total: int  # attention + refinement + regressor (+ backbone at full scale)
    discriminator: int
    backbone: int | None
    assumptions: tuple[str, ...] = ASSUMPTIONS

    def lines(self) -> list[str]:
        out = [f"{name:14s} {count:>12,}" for name, count in self.modules.items()]
        if self.backbone is not None:
            out.append(f"{'backbone':14s} {self.backbone:>12,}")
        out.append(f"{'model total':14s} {self.model_total:>12,}")
        out.append(f"{'discriminator':14s} {self.discriminator:>12,} (train-time only)")
        return out


def _n_params(weights) -> int:
    return sum(p.size for p in weights.parameters().values())


def count_params(settings: ModelSettings, full_scale: bool = False) -> CountReport:
    """Exact per-module counts for the configured shapes."""
    if full_scale:
        settings = replace(
            FULL_SCALE,
            mode=settings.mode,
            use_hafi=settings.use_hafi,
            seq_len=settings.seq_len,
        )
    moca_cfg = MocaConfig(
        channels=settings.channels, reduction=settings.reduction_ratio, mode=settings.mode
    )
    modules = {"moca": _n_params(MocaWeights.init(moca_cfg, 0))}
    if settings.use_hafi:
        hafi_cfg = HafiConfig(
            frames_per_group=settings.frames_per_group,
            resize_channels=settings.resolved_resize_channels(),
        )
        modules["hafi"] = _n_params(HafiWeights.init(settings.channels, hafi_cfg, 0))
    modules["regressor"] = _n_params(RegressorWeights.init(settings.channels, 0))
    disc = _n_params(DiscriminatorWeights.init(settings.seq_len * POSE_DIM, 0))
    backbone = BACKBONE_PARAMS if full_scale else None
    total = sum(modules.values()) + (backbone or 0)
    return CountReport(modules=modules, model_total=total, discriminator=disc, backbone=backbone)
