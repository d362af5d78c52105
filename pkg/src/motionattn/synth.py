"""Deterministic synthetic motion sequences and their frame features.

Sequences are built from smooth sinusoidal parameter trajectories pushed
through the linear toy body model, so every sample has exact ground-truth
parameters, joints, and vertices in millimeters. A fixed seeded encoder (a
random affine map of the flattened joints followed by tanh, plus optional
Gaussian noise) stands in for a frame-level feature extractor: frames with
similar poses get similar features, which is all the temporal modules need.

Everything is a pure function of (config, seed). Train, validation, and
adversarial "real motion" pools draw from disjoint seed ranges.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ShapeError
from .regressor import CAM_DIM, POSE_DIM, SHAPE_DIM, THETA_DIM, ToyBodyModel

DATASET_MAGIC = b"MSYN"
DATASET_VERSION = 1

# seed-range offsets keeping the three sequence pools disjoint
VAL_SEED_OFFSET = 100_000
REAL_MOTION_SEED_OFFSET = 200_000

# sub-stream tags so the encoder, trajectories, and noise never share a stream
_ENCODER_STREAM = 11
_TRAJECTORY_STREAM = 23
_NOISE_STREAM = 37

# mm of joint deviation mapped to one unit of encoder pre-activation
_ENCODER_INPUT_SCALE = 100.0

_SHAPE_FRACTION = 0.5  # shape magnitude relative to the amplitude bound
_CAM_FRACTION = 0.1  # camera wobble relative to the amplitude bound

# weak-perspective scale (2D units per mm): keeps projected coordinates O(1)
CAM_SCALE_BASE = 0.004


@dataclass
class SynthConfig:
    seq_len: int = 16
    n_joints: int = 14
    n_vertices: int = 50
    channels: int = 64
    seed: int = 0  # config-level seed: encoder weights and stream derivation
    n_harmonics: int = 3
    amplitude: float = 2.5
    continuity_bound: float = 40.0  # mm of joint travel per frame
    noise_sigma: float = 0.05
    fps: float = 25.0
    body_seed: int = 2024

    def __post_init__(self):
        if min(self.seq_len, self.n_joints, self.n_vertices, self.channels) < 1:
            raise ShapeError("seq_len, n_joints, n_vertices, channels must be positive")
        if self.n_harmonics < 1 or self.fps <= 0 or self.continuity_bound <= 0:
            raise ShapeError("n_harmonics, fps, continuity_bound must be positive")
        if self.amplitude < 0 or self.noise_sigma < 0:
            raise ShapeError("amplitude and noise_sigma must be nonnegative")

    def body_model(self) -> ToyBodyModel:
        return ToyBodyModel.generate(self.body_seed, self.n_joints, self.n_vertices)


@dataclass
class SkeletonSequence:
    joints3d: np.ndarray  # (T, J, 3) mm
    vertices: np.ndarray  # (T, V, 3) mm
    gt_params: np.ndarray  # (T, 85)
    fps: float


def generate_sequence(cfg: SynthConfig, seed: int) -> SkeletonSequence:
    """One smooth sequence, bitwise-deterministic given (cfg, seed).

    Pose and camera parameters follow sums of ``n_harmonics`` seeded
    sinusoids; shape is constant per sequence. After synthesis the pose
    deviations are rescaled, if needed, so no joint travels more than
    ``continuity_bound`` millimeters between consecutive frames.
    """
    rng = np.random.default_rng([cfg.seed, _TRAJECTORY_STREAM, seed])
    t_axis = np.arange(cfg.seq_len) / cfg.fps

    def harmonics(n_params, scale):
        amps = rng.uniform(0, scale, (n_params, cfg.n_harmonics)) / cfg.n_harmonics
        freqs = rng.uniform(0.2, 1.0, (n_params, cfg.n_harmonics))
        phases = rng.uniform(0, 2 * np.pi, (n_params, cfg.n_harmonics))
        waves = amps[None] * np.sin(
            2 * np.pi * freqs[None] * t_axis[:, None, None] + phases[None]
        )
        return waves.sum(axis=2)

    pose = harmonics(POSE_DIM, cfg.amplitude)
    shape_row = cfg.amplitude * _SHAPE_FRACTION * rng.uniform(-1, 1, SHAPE_DIM)
    shape = np.tile(shape_row, (cfg.seq_len, 1))
    camera = np.array([CAM_SCALE_BASE, 0.0, 0.0]) + harmonics(
        CAM_DIM, cfg.amplitude * _CAM_FRACTION
    ) * np.array([CAM_SCALE_BASE, 1.0, 1.0])

    body = cfg.body_model()
    params = np.concatenate([pose, shape, camera], axis=1)
    joints = body.joints_of(params)
    if cfg.seq_len > 1:
        step = np.linalg.norm(np.diff(joints, axis=0), axis=2).max()
        if step > cfg.continuity_bound:
            pose *= (cfg.continuity_bound / step) * (1.0 - 1e-9)
            params = np.concatenate([pose, shape, camera], axis=1)
            joints = body.joints_of(params)
    return SkeletonSequence(
        joints3d=joints,
        vertices=body.vertices_of(params),
        gt_params=params,
        fps=cfg.fps,
    )


@dataclass
class FeatureEncoder:
    """Fixed random affine over rest-centered joints, squashed by tanh.

    Centering on the rest skeleton puts the motion component of a frame at
    unit scale, so the self-similarity of the features tracks the
    similarity of poses rather than the constant skeleton.
    """

    weight: np.ndarray  # (3J, C)
    bias: np.ndarray  # (C,)
    center: np.ndarray  # (3J,) rest skeleton, flattened
    input_scale: float = _ENCODER_INPUT_SCALE

    @classmethod
    def from_config(cls, cfg: SynthConfig) -> "FeatureEncoder":
        rng = np.random.default_rng([cfg.seed, _ENCODER_STREAM])
        n_in = 3 * cfg.n_joints
        weight = rng.normal(0.0, 1.0 / np.sqrt(n_in), (n_in, cfg.channels))
        bias = rng.normal(0.0, 0.1, cfg.channels)
        return cls(weight, bias, cfg.body_model().rest_joints.reshape(-1))

    def lipschitz_bound(self) -> float:
        """Feature distance per mm of joint distance (tanh is 1-Lipschitz)."""
        return float(np.linalg.svd(self.weight, compute_uv=False)[0] / self.input_scale)

    def encode(self, joints3d: np.ndarray) -> np.ndarray:
        frames = np.asarray(joints3d, dtype=float)
        flat = frames.reshape(frames.shape[0], -1)
        if flat.shape[1] != self.weight.shape[0]:
            raise ShapeError(
                f"encoder built for {self.weight.shape[0]} joint values, got {flat.shape[1]}"
            )
        flat = (flat - self.center) / self.input_scale
        return np.tanh(flat @ self.weight + self.bias)


def encode_features(s: SkeletonSequence, cfg: SynthConfig, seed: int) -> np.ndarray:
    """(T, C) features for a sequence; noise is seeded per (cfg, seed)."""
    feats = FeatureEncoder.from_config(cfg).encode(s.joints3d)
    if cfg.noise_sigma > 0:
        noise_rng = np.random.default_rng([cfg.seed, _NOISE_STREAM, seed])
        feats = feats + cfg.noise_sigma * noise_rng.standard_normal(feats.shape)
    return feats


# ---------------------------------------------------------------------------
# dataset file format


@dataclass
class DatasetRecord:
    gt_params: np.ndarray  # (T, 85)
    joints3d: np.ndarray  # (T, J, 3)
    vertices: np.ndarray  # (T, V, 3)
    features: np.ndarray  # (T, C)


def make_dataset(cfg: SynthConfig, n_sequences: int, seed: int, path) -> dict:
    """Generate and encode ``n_sequences`` samples (record i uses seed+i)
    and write them; returns summary counts."""
    if n_sequences < 0:
        raise ShapeError("n_sequences must be nonnegative")
    chunks = [DATASET_MAGIC, struct.pack("<II", DATASET_VERSION, n_sequences)]
    for i in range(n_sequences):
        seq = generate_sequence(cfg, seed + i)
        feats = encode_features(seq, cfg, seed + i)
        chunks.append(
            struct.pack("<IIII", cfg.seq_len, cfg.n_joints, cfg.n_vertices, cfg.channels)
        )
        for arr in (seq.gt_params, seq.joints3d, seq.vertices, feats):
            chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    data = b"".join(chunks)
    Path(path).write_bytes(data)
    return {
        "sequences": n_sequences,
        "frames": n_sequences * cfg.seq_len,
        "bytes": len(data),
        "path": str(path),
    }


def read_dataset(path) -> list[DatasetRecord]:
    """Parse a dataset file; raises ``DataFormatError`` on any defect."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != DATASET_MAGIC:
        raise DataFormatError(f"{path}: not a dataset file (bad magic)")
    offset = 4

    def take(n, what):
        nonlocal offset
        if offset + n > len(raw):
            raise DataFormatError(f"{path}: truncated while reading {what}")
        piece = raw[offset : offset + n]
        offset += n
        return piece

    version, count = struct.unpack("<II", take(8, "header"))
    if version != DATASET_VERSION:
        raise DataFormatError(
            f"{path}: dataset version {version} unsupported (expected {DATASET_VERSION})"
        )
    records = []
    for i in range(count):
        t, j, v, c = struct.unpack("<IIII", take(16, f"record {i} shape"))
        if min(t, j, v, c) < 1:
            raise DataFormatError(f"{path}: record {i} has zero-sized shape")

        def array(shape, what):
            n_items = int(np.prod(shape))
            buf = take(4 * n_items, what)
            return np.frombuffer(buf, dtype="<f4").astype(np.float64).reshape(shape)

        records.append(
            DatasetRecord(
                gt_params=array((t, THETA_DIM), f"record {i} params"),
                joints3d=array((t, j, 3), f"record {i} joints"),
                vertices=array((t, v, 3), f"record {i} vertices"),
                features=array((t, c), f"record {i} features"),
            )
        )
    if offset != len(raw):
        raise DataFormatError(f"{path}: {len(raw) - offset} trailing bytes")
    return records
