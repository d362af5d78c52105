"""Full model: encoder features -> temporal attention -> window refinement
-> iterative regressor -> toy body model -> weak-perspective projection.

`PoseModel` bundles the weights of all stages plus the body constants so a
checkpoint reproduces evaluation exactly. Forward passes build an autodiff
graph; evaluation helpers read the arrays out afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CheckpointCorruptError, ShapeError
from .hafi import HafiConfig, HafiWeights, hafi_refine_all
from .metrics import evaluate_sequences
from .moca import AttentionMode, MocaConfig, MocaWeights, moca_forward
from .regressor import (
    RegressorWeights,
    ToyBodyModel,
    body_joints,
    body_vertices,
    project_sequence,
    regress_sequence,
    split_theta,
)
from .synth import DatasetRecord
from .tensor import Tensor

MODE_ORDER = (AttentionMode.MOCA, AttentionMode.NONLOCAL_ONLY, AttentionMode.NSSM_ONLY)


@dataclass
class ForwardResult:
    """Graph outputs for one sequence (all differentiable tensors)."""

    theta: Tensor  # (T, 85)
    pose: Tensor  # (T, 72)
    joints_flat: Tensor  # (T, 3J)
    vertices_flat: Tensor  # (T, 3V)
    joints2d: Tensor  # (T, 2J)

    def joints3d(self) -> np.ndarray:
        t = self.joints_flat.dims[0]
        return self.joints_flat.data.reshape(t, -1, 3)

    def vertices3d(self) -> np.ndarray:
        t = self.vertices_flat.dims[0]
        return self.vertices_flat.data.reshape(t, -1, 3)


@dataclass
class PoseModel:
    moca_cfg: MocaConfig
    moca: MocaWeights
    hafi_cfg: HafiConfig | None
    hafi: HafiWeights | None
    regressor: RegressorWeights
    body: ToyBodyModel
    n_iter: int = 3

    @classmethod
    def build(
        cls,
        body: ToyBodyModel,
        channels: int = 64,
        reduction: int = 2,
        mode: AttentionMode = AttentionMode.MOCA,
        detach_nssm: bool = False,
        use_hafi: bool = True,
        frames_per_group: int = 3,
        resize_channels: int | None = None,
        n_iter: int = 3,
        regressor_hidden: tuple[int, int] = (1024, 1024),
        seed: int = 1,
    ) -> "PoseModel":
        moca_cfg = MocaConfig(
            channels=channels, reduction=reduction, mode=mode, detach_nssm=detach_nssm
        )
        hafi_cfg = None
        hafi = None
        if use_hafi:
            if resize_channels is None:
                resize_channels = max(1, channels // 8)
            hafi_cfg = HafiConfig(
                frames_per_group=frames_per_group, resize_channels=resize_channels
            )
            hafi = HafiWeights.init(channels, hafi_cfg, seed + 1)
        return cls(
            moca_cfg=moca_cfg,
            moca=MocaWeights.init(moca_cfg, seed),
            hafi_cfg=hafi_cfg,
            hafi=hafi,
            regressor=RegressorWeights.init(channels, seed + 2, hidden=regressor_hidden),
            body=body,
            n_iter=n_iter,
        )

    def forward(self, features) -> ForwardResult:
        x = features if isinstance(features, Tensor) else Tensor(features)
        z = moca_forward(x, self.moca, self.moca_cfg)
        if self.hafi is not None:
            z = hafi_refine_all(z, self.hafi, self.hafi_cfg)
        theta = regress_sequence(z, self.regressor, self.n_iter)
        pose, shape, camera = split_theta(theta)
        joints = body_joints(pose, shape, self.body)
        vertices = body_vertices(pose, shape, self.body)
        joints2d = project_sequence(joints, camera)
        return ForwardResult(theta, pose, joints, vertices, joints2d)

    def parameters(self) -> dict[str, Tensor]:
        out = {f"moca.{k}": v for k, v in self.moca.parameters().items()}
        if self.hafi is not None:
            out.update({f"hafi.{k}": v for k, v in self.hafi.parameters().items()})
        out.update({f"regressor.{k}": v for k, v in self.regressor.parameters().items()})
        return out

    # --- checkpoint state ---

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {name: p.data for name, p in self.parameters().items()}
        arrays.update({f"body.{k}": v for k, v in self.body.arrays().items()})
        arrays["meta.mode"] = np.array(float(MODE_ORDER.index(self.moca_cfg.mode)))
        arrays["meta.detach_nssm"] = np.array(float(self.moca_cfg.detach_nssm))
        arrays["meta.n_iter"] = np.array(float(self.n_iter))
        return arrays

    @classmethod
    def from_state_arrays(cls, arrays: dict[str, np.ndarray]) -> "PoseModel":
        try:
            mode = MODE_ORDER[int(arrays["meta.mode"])]
            detach_nssm = bool(arrays["meta.detach_nssm"])
            n_iter = int(arrays["meta.n_iter"])
            body = ToyBodyModel.from_arrays(
                {k.split(".", 1)[1]: v for k, v in arrays.items() if k.startswith("body.")}
            )
            channels, inner = arrays["moca.w_theta"].shape
            moca_cfg = MocaConfig(
                channels=channels,
                reduction=channels // inner,
                mode=mode,
                detach_nssm=detach_nssm,
            )
            moca = MocaWeights(
                **{k: Tensor(arrays[f"moca.{k}"], name=k) for k in MocaWeights.init(moca_cfg, 0).parameters()}
            )
            hafi_cfg = None
            hafi = None
            if "hafi.resize_w" in arrays:
                hafi_cfg = HafiConfig(
                    frames_per_group=arrays["hafi.mlp_w3"].shape[1],
                    resize_channels=arrays["hafi.resize_w"].shape[1],
                )
                hafi = HafiWeights(
                    **{
                        k: Tensor(arrays[f"hafi.{k}"], name=k)
                        for k in HafiWeights.init(channels, hafi_cfg, 0).parameters()
                    }
                )
            reg_fields = RegressorWeights.init(channels, 0, hidden=(2, 2)).parameters()
            regressor = RegressorWeights(
                **{k: Tensor(arrays[f"regressor.{k}"], name=k) for k in reg_fields}
            )
        except KeyError as missing:
            raise CheckpointCorruptError(f"checkpoint is missing tensor {missing}") from None
        return cls(moca_cfg, moca, hafi_cfg, hafi, regressor, body, n_iter)


def evaluate_model(model: PoseModel, records: list[DatasetRecord]) -> dict:
    """All four metrics of a model over dataset records."""
    if not records:
        raise ShapeError("evaluate_model: no records")
    pred_j, gt_j, pred_v, gt_v = [], [], [], []
    for rec in records:
        result = model.forward(rec.features)
        pred_j.append(result.joints3d())
        gt_j.append(rec.joints3d)
        pred_v.append(result.vertices3d())
        gt_v.append(rec.vertices)
    return evaluate_sequences(pred_j, gt_j, pred_v, gt_v)
