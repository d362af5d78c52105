"""Pose evaluation metrics: MPJPE, PA-MPJPE, MPVPE, and acceleration error.

All four reduce Euclidean distances between predicted and ground-truth 3D
points and are reported in the units of the inputs (millimeters for the
bundled synthetic data). Acceleration error uses per-frame^2 second
differences with no frame-rate normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ShapeError

PELVIS = 0  # joint index used for root alignment


@dataclass
class SimilarityTransform:
    """x -> scale * R x + t with a proper rotation (det +1)."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * points @ self.rotation.T + self.translation


def procrustes_align(pred: np.ndarray, gt: np.ndarray) -> SimilarityTransform:
    """Least-squares similarity transform taking ``pred`` onto ``gt``.

    Centers both point sets, takes the SVD of their covariance, flips the
    smallest singular direction if needed so the rotation is proper, and
    solves scale and translation in closed form.
    """
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.ndim != 2 or pred.shape[1] != 3 or pred.shape != gt.shape:
        raise ShapeError(f"procrustes_align: matching (J, 3) sets expected, got {pred.shape} vs {gt.shape}")
    if pred.shape[0] < 3:
        raise DegenerateInputError("procrustes_align: at least 3 points required")

    mu_p = pred.mean(axis=0)
    mu_g = gt.mean(axis=0)
    p0 = pred - mu_p
    g0 = gt - mu_g
    var_p = np.sum(p0**2)
    if var_p < 1e-12:
        raise DegenerateInputError("procrustes_align: source points are coincident")

    cov = g0.T @ p0
    u, s, vt = np.linalg.svd(cov)
    d = np.sign(np.linalg.det(u @ vt))
    flip = np.diag([1.0, 1.0, d])
    rotation = u @ flip @ vt
    scale = float(np.sum(s * np.diag(flip)) / var_p)
    translation = mu_g - scale * rotation @ mu_p
    return SimilarityTransform(scale, rotation, translation)


def _check_joint_seq(pred, gt, name):
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.ndim != 3 or pred.shape[2] != 3 or pred.shape != gt.shape:
        raise ShapeError(f"{name}: matching (T, J, 3) arrays expected, got {pred.shape} vs {gt.shape}")
    return pred, gt


def mpjpe(pred_joints: np.ndarray, gt_joints: np.ndarray) -> float:
    """Mean joint distance after moving each predicted frame so its pelvis
    coincides with the ground-truth pelvis."""
    pred, gt = _check_joint_seq(pred_joints, gt_joints, "mpjpe")
    diff = (pred - pred[:, PELVIS : PELVIS + 1]) - (gt - gt[:, PELVIS : PELVIS + 1])
    return float(np.linalg.norm(diff, axis=2).mean())


def pa_mpjpe(pred_joints: np.ndarray, gt_joints: np.ndarray) -> float:
    """Mean joint distance after an optimal per-frame similarity alignment."""
    pred, gt = _check_joint_seq(pred_joints, gt_joints, "pa_mpjpe")
    dists = []
    for frame_pred, frame_gt in zip(pred, gt):
        transform = procrustes_align(frame_pred, frame_gt)
        dists.append(np.linalg.norm(transform.apply(frame_pred) - frame_gt, axis=1))
    return float(np.mean(dists))


def mpvpe(pred_vertices: np.ndarray, gt_vertices: np.ndarray) -> float:
    """Mean vertex distance with no alignment."""
    pred, gt = _check_joint_seq(pred_vertices, gt_vertices, "mpvpe")
    return float(np.linalg.norm(pred - gt, axis=2).mean())


def acc_err(pred_joints: np.ndarray, gt_joints: np.ndarray) -> float:
    """Mean difference of per-joint second temporal differences.

    accel_t = x_{t+1} - 2 x_t + x_{t-1}; averaged over the inner frames and
    joints. Needs at least 3 frames.
    """
    pred, gt = _check_joint_seq(pred_joints, gt_joints, "acc_err")
    if pred.shape[0] < 3:
        raise ShapeError(f"acc_err: at least 3 frames required, got {pred.shape[0]}")
    accel_pred = pred[2:] - 2 * pred[1:-1] + pred[:-2]
    accel_gt = gt[2:] - 2 * gt[1:-1] + gt[:-2]
    return float(np.linalg.norm(accel_pred - accel_gt, axis=2).mean())


METRIC_NAMES = ("MPJPE", "PA-MPJPE", "MPVPE", "ACC-ERR")


def evaluate_sequences(
    pred_joints: list[np.ndarray],
    gt_joints: list[np.ndarray],
    pred_vertices: list[np.ndarray],
    gt_vertices: list[np.ndarray],
) -> dict[str, float]:
    """All four metrics over a set of sequences.

    Per-sequence values are averaged weighted by their sample counts (frames
    x joints, or inner frames x joints for the acceleration term), which for
    equal-length sequences equals the plain mean. Second differences never
    cross sequence boundaries.
    """
    if not pred_joints:
        raise ShapeError("evaluate_sequences: empty input")
    sums = dict.fromkeys(METRIC_NAMES, 0.0)
    counts = dict.fromkeys(METRIC_NAMES, 0)
    for pj, gj, pv, gv in zip(pred_joints, gt_joints, pred_vertices, gt_vertices):
        n_frames, n_joints = pj.shape[0], pj.shape[1]
        n_joint_samples = n_frames * n_joints
        n_vertex_samples = pv.shape[0] * pv.shape[1]
        n_accel_samples = max(n_frames - 2, 0) * n_joints
        sums["MPJPE"] += mpjpe(pj, gj) * n_joint_samples
        counts["MPJPE"] += n_joint_samples
        sums["PA-MPJPE"] += pa_mpjpe(pj, gj) * n_joint_samples
        counts["PA-MPJPE"] += n_joint_samples
        sums["MPVPE"] += mpvpe(pv, gv) * n_vertex_samples
        counts["MPVPE"] += n_vertex_samples
        if n_accel_samples:
            sums["ACC-ERR"] += acc_err(pj, gj) * n_accel_samples
            counts["ACC-ERR"] += n_accel_samples
    out = {}
    for name in METRIC_NAMES:
        out[name] = sums[name] / counts[name] if counts[name] else float("nan")
    out["_counts"] = dict(counts)
    return out


def metric_report_lines(metrics: dict) -> list[str]:
    """One ``NAME value count`` line per metric, for the CLI report."""
    counts = metrics.get("_counts", {})
    return [
        f"{name} {metrics[name]:.6f} {counts.get(name, 0)}" for name in METRIC_NAMES
    ]
