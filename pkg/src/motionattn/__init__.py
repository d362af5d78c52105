"""Temporal attention over feature sequences, with a desk-scale 3D pose
training pipeline built on a small reverse-mode autodiff core.

The public surface re-exports the pieces most callers need; the submodules
stay importable directly for everything else.
"""

from .config import DataSettings, ModelSettings, RunConfig, TrainSettings
from .counting import CountReport, count_params
from .hafi import HafiConfig, HafiWeights, group_attend, hafi_refine, hafi_refine_all
from .losses import (
    DiscriminatorWeights,
    LossWeights,
    adversarial_losses,
    loss_supervised,
)
from .metrics import (
    SimilarityTransform,
    acc_err,
    evaluate_sequences,
    mpjpe,
    mpvpe,
    pa_mpjpe,
    procrustes_align,
)
from .moca import (
    AttentionMode,
    MocaConfig,
    MocaWeights,
    attention_maps,
    fuse_maps,
    moca_forward,
    nssm,
    pairwise_attention,
)
from .optim import AdamState, adam_step, lr_schedule_step
from .pipeline import ForwardResult, PoseModel, evaluate_model
from .regressor import (
    BodyParams,
    RegressorWeights,
    ToyBodyModel,
    project_weak_perspective,
    regress_iterative,
    regress_sequence,
    toy_body_model,
)
from .synth import (
    FeatureEncoder,
    SkeletonSequence,
    SynthConfig,
    encode_features,
    generate_sequence,
    make_dataset,
    read_dataset,
)
from .tensor import GradReport, Tensor, backward, grad_check, mse
from .train import TrainResult, load_model, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AttentionMode",
    "BodyParams",
    "CountReport",
    "DataSettings",
    "DiscriminatorWeights",
    "FeatureEncoder",
    "ForwardResult",
    "GradReport",
    "HafiConfig",
    "HafiWeights",
    "LossWeights",
    "MocaConfig",
    "MocaWeights",
    "ModelSettings",
    "PoseModel",
    "RegressorWeights",
    "RunConfig",
    "SimilarityTransform",
    "SkeletonSequence",
    "SynthConfig",
    "Tensor",
    "ToyBodyModel",
    "TrainResult",
    "TrainSettings",
    "acc_err",
    "adam_step",
    "adversarial_losses",
    "attention_maps",
    "backward",
    "count_params",
    "encode_features",
    "evaluate_model",
    "evaluate_sequences",
    "fuse_maps",
    "generate_sequence",
    "grad_check",
    "group_attend",
    "hafi_refine",
    "hafi_refine_all",
    "load_model",
    "loss_supervised",
    "lr_schedule_step",
    "make_dataset",
    "moca_forward",
    "mpjpe",
    "mse",
    "mpvpe",
    "nssm",
    "pa_mpjpe",
    "pairwise_attention",
    "procrustes_align",
    "project_weak_perspective",
    "read_dataset",
    "regress_iterative",
    "regress_sequence",
    "toy_body_model",
    "train",
]
