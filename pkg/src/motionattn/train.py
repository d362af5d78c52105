"""Seeded training loop: alternating generator and discriminator updates,
patience-based LR decay, per-epoch validation and checkpoints.

The whole loop is a pure function of the config seeds and the dataset bytes:
batch order, weight init, and the discriminator's "real motion" pool are all
drawn from named seed streams, so reruns produce hash-identical checkpoints.
Generator and discriminator parameters are disjoint partitions; each side's
Adam state only ever sees its own partition.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .errors import DataFormatError, TrainingDivergedError
from .losses import DiscriminatorWeights, LossWeights, adversarial_losses, loss_supervised
from .metrics import METRIC_NAMES
from .optim import AdamState, adam_step, clip_grad_norm, lr_schedule_step
from .pipeline import PoseModel, evaluate_model
from .regressor import POSE_DIM, THETA_DIM, ToyBodyModel, project_weak_perspective
from .synth import (
    REAL_MOTION_SEED_OFFSET,
    DatasetRecord,
    SynthConfig,
    generate_sequence,
    read_dataset,
)
from .tensor import Tensor, add, backward, scale

REPORT_HEADER = ["epoch", "lr", "train_loss", "mpjpe", "pa_mpjpe", "mpvpe", "acc_err"]


@dataclass
class EpochRow:
    epoch: int
    lr: float
    train_loss: float
    metrics: dict[str, float]

    def as_csv(self) -> list[str]:
        return [
            str(self.epoch),
            f"{self.lr:.10g}",
            f"{self.train_loss:.10g}",
            *(f"{self.metrics[k]:.10g}" for k in METRIC_NAMES),
        ]


@dataclass
class TrainResult:
    rows: list[EpochRow]  # rows[0] is the untrained baseline (epoch 0)
    checkpoint_path: Path
    report_path: Path

    @property
    def initial(self) -> EpochRow:
        return self.rows[0]

    @property
    def final(self) -> EpochRow:
        return self.rows[-1]


def _check_records(records: list[DatasetRecord], cfg: RunConfig, path) -> None:
    if not records:
        raise DataFormatError(f"{path}: dataset has no records")
    for i, rec in enumerate(records):
        t, c = rec.features.shape
        if c != cfg.model.channels:
            raise DataFormatError(
                f"{path}: record {i} has {c} feature channels, config expects {cfg.model.channels}"
            )
        if t != cfg.model.seq_len:
            raise DataFormatError(
                f"{path}: record {i} has {t} frames, config expects {cfg.model.seq_len}"
            )


def _gt_tensors(rec: DatasetRecord):
    t = rec.gt_params.shape[0]
    theta = Tensor(rec.gt_params)
    joints = Tensor(rec.joints3d.reshape(t, -1))
    joints2d = project_weak_perspective(rec.joints3d, rec.gt_params[:, THETA_DIM - 3 :])
    return theta, joints, Tensor(joints2d.reshape(t, -1))


def _mean(losses):
    total = losses[0]
    for item in losses[1:]:
        total = add(total, item)
    return scale(total, 1.0 / len(losses))


def _real_pose_batch(synth_cfg: SynthConfig, base: int, count: int) -> list[Tensor]:
    """Held-out motion sequences for the discriminator's real side."""
    out = []
    for i in range(count):
        seq = generate_sequence(synth_cfg, REAL_MOTION_SEED_OFFSET + base + i)
        out.append(Tensor(seq.gt_params[:, :POSE_DIM]))
    return out


def train(cfg: RunConfig, train_path, val_path, out_dir) -> TrainResult:
    """Run the full loop and write per-epoch checkpoints plus the report.

    The per-step objective is the weighted supervision plus (when
    ``train.w_adv`` > 0) the adversarial generator term; a discriminator
    step follows each generator step 1:1. The LR schedule watches
    validation MPJPE and decays both rates together.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t_cfg = cfg.train

    train_records = read_dataset(train_path)
    val_records = read_dataset(val_path)
    _check_records(train_records, cfg, train_path)
    _check_records(val_records, cfg, val_path)

    synth_cfg = cfg.synth_config()
    body = ToyBodyModel.generate(cfg.data.body_seed, cfg.data.joints, cfg.data.vertices)
    model = PoseModel.build(body=body, seed=t_cfg.seed, **cfg.model_kwargs())
    disc = DiscriminatorWeights.init(cfg.model.seq_len * POSE_DIM, seed=t_cfg.seed + 3)
    gen_params = model.parameters()
    disc_params = {f"disc.{k}": v for k, v in disc.parameters().items()}

    opt_gen = AdamState(lr=t_cfg.lr)
    opt_disc = AdamState(lr=t_cfg.disc_lr)
    loss_weights = LossWeights(t_cfg.w_params, t_cfg.w_3d, t_cfg.w_2d, t_cfg.w_adv)

    gt_cache = [_gt_tensors(rec) for rec in train_records]

    def sequence_loss(idx: int):
        result = model.forward(train_records[idx].features)
        gt_theta, gt_j3d, gt_j2d = gt_cache[idx]
        loss, _ = loss_supervised(
            result.theta, result.joints_flat, result.joints2d,
            gt_theta, gt_j3d, gt_j2d, loss_weights,
        )
        return loss, result

    rows = [
        EpochRow(
            epoch=0,
            lr=opt_gen.lr,
            train_loss=_mean([sequence_loss(i)[0] for i in range(len(train_records))]).item(),
            metrics=evaluate_model(model, val_records),
        )
    ]

    best_metric = rows[0].metrics["MPJPE"]
    stagnation = 0
    global_step = 0

    for epoch in range(1, t_cfg.epochs + 1):
        lr_at_start = opt_gen.lr
        order = np.random.default_rng([t_cfg.seed, epoch]).permutation(len(train_records))
        loss_sum = 0.0
        loss_count = 0
        for start in range(0, len(order), t_cfg.batch):
            batch = order[start : start + t_cfg.batch]
            losses, results = zip(*(sequence_loss(int(i)) for i in batch))
            objective = _mean(list(losses))
            disc_loss = None
            if t_cfg.w_adv > 0:
                fake_poses = [r.pose for r in results]
                real_poses = _real_pose_batch(synth_cfg, global_step * t_cfg.batch, len(batch))
                gen_adv, disc_loss = adversarial_losses(disc, real_poses, fake_poses)
                objective = add(objective, scale(gen_adv, t_cfg.w_adv))

            value = objective.item()
            if not np.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, step {global_step} (lr={opt_gen.lr})"
                )
            loss_sum += value * len(batch)
            loss_count += len(batch)

            backward(objective, leaves=list(gen_params.values()))
            grads = {name: p.grad_or_zero() for name, p in gen_params.items()}
            if t_cfg.clip_norm > 0:
                clip_grad_norm(grads, t_cfg.clip_norm)
            adam_step(gen_params, grads, opt_gen)

            if disc_loss is not None:
                backward(disc_loss, leaves=list(disc_params.values()))
                disc_grads = {name: p.grad_or_zero() for name, p in disc_params.items()}
                adam_step(disc_params, disc_grads, opt_disc)
            global_step += 1

        metrics = evaluate_model(model, val_records)
        rows.append(
            EpochRow(
                epoch=epoch,
                lr=lr_at_start,
                train_loss=loss_sum / loss_count,
                metrics=metrics,
            )
        )
        stagnation, new_lr = lr_schedule_step(
            best_metric, metrics["MPJPE"], stagnation, opt_gen.lr,
            patience=t_cfg.patience, factor=t_cfg.lr_decay_factor,
        )
        if new_lr != opt_gen.lr:
            opt_disc.lr /= t_cfg.lr_decay_factor
            opt_gen.lr = new_lr
        best_metric = min(best_metric, metrics["MPJPE"])

        save_checkpoint(
            out_dir / f"checkpoint_epoch_{epoch:03d}.mpsn",
            _full_state(model, disc, opt_gen, opt_disc, cfg),
        )

    final_path = out_dir / "checkpoint_final.mpsn"
    save_checkpoint(final_path, _full_state(model, disc, opt_gen, opt_disc, cfg))
    report_path = _write_report(rows, out_dir)
    return TrainResult(rows=rows, checkpoint_path=final_path, report_path=report_path)


def _full_state(model, disc, opt_gen, opt_disc, cfg) -> dict[str, np.ndarray]:
    arrays = model.state_arrays()
    arrays.update({f"disc.{k}": p.data for k, p in disc.parameters().items()})
    arrays["meta.seq_len"] = np.array(float(cfg.model.seq_len))
    for tag, opt in (("optim_gen", opt_gen), ("optim_disc", opt_disc)):
        arrays[f"{tag}.step"] = np.array(float(opt.step))
        arrays[f"{tag}.lr"] = np.array(opt.lr)
        for name, m in opt.m.items():
            arrays[f"{tag}.m.{name}"] = m
        for name, v in opt.v.items():
            arrays[f"{tag}.v.{name}"] = v
    return arrays


def _write_report(rows: list[EpochRow], out_dir: Path) -> Path:
    report_path = out_dir / "report.csv"
    with report_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_HEADER)
        for row in rows:
            writer.writerow(row.as_csv())
    from .plotting import save_training_curves

    save_training_curves(rows, out_dir / "training_curves.png")
    return report_path


def load_model(checkpoint_path) -> PoseModel:
    """Rebuild a model (weights, body constants, mode) from a checkpoint."""
    return PoseModel.from_state_arrays(load_checkpoint(checkpoint_path))
