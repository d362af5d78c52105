"""Iterative body-parameter regressor, a linear toy body model, and the
weak-perspective camera.

Per frame the regressor refines an 85-vector (72 pose + 10 shape + 3 camera)
by repeatedly feeding the current estimate back in with the frame feature:
theta <- theta + MLP([z, theta]). The toy body model is a fixed seeded linear
map from (pose, shape) to joint and vertex offsets around a rest skeleton;
joint 0 is the pelvis and stays at the body-frame origin. It stands in for a
full articulated mesh so the rest of the pipeline has real 3D targets at
desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor import (
    Tensor,
    _node,
    add,
    concat_cols,
    linear,
    matmul,
    relu,
    take_cols,
    tile_rows,
)

POSE_DIM = 72
SHAPE_DIM = 10
CAM_DIM = 3
THETA_DIM = POSE_DIM + SHAPE_DIM + CAM_DIM

# magnitudes (mm) of the seeded body constants; pose gain is sized so
# unit-scale pose trajectories move joints by limb-swing distances
_REST_SPREAD = 250.0
_POSE_GAIN = 60.0
_SHAPE_GAIN = 30.0


@dataclass
class BodyParams:
    """Plain-array view of one frame's 85 parameters."""

    pose: np.ndarray
    shape: np.ndarray
    camera: np.ndarray

    @classmethod
    def from_vector(cls, theta) -> "BodyParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (THETA_DIM,):
            raise ShapeError(f"BodyParams: ({THETA_DIM},) vector expected, got {theta.shape}")
        return cls(theta[:POSE_DIM], theta[POSE_DIM : POSE_DIM + SHAPE_DIM], theta[-CAM_DIM:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.pose, self.shape, self.camera])


def split_theta(theta: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Columns of a (T, 85) parameter matrix as (pose, shape, camera)."""
    if theta.data.ndim != 2 or theta.dims[1] != THETA_DIM:
        raise ShapeError(f"split_theta: (T, {THETA_DIM}) expected, got {theta.dims}")
    pose = take_cols(theta, 0, POSE_DIM)
    shape = take_cols(theta, POSE_DIM, POSE_DIM + SHAPE_DIM)
    camera = take_cols(theta, POSE_DIM + SHAPE_DIM, THETA_DIM)
    return pose, shape, camera


@dataclass
class RegressorWeights:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    w3: Tensor
    b3: Tensor
    mean_theta: Tensor

    @classmethod
    def init(
        cls,
        channels: int,
        seed: int,
        hidden: tuple[int, int] = (1024, 1024),
    ) -> "RegressorWeights":
        rng = np.random.default_rng(seed)
        h1, h2 = hidden
        n_in = channels + THETA_DIM

        def layer(a, b, name):
            bound = 1.0 / np.sqrt(a)
            return (
                Tensor(rng.uniform(-bound, bound, (a, b)), name=f"{name}_w"),
                Tensor(np.zeros(b), name=f"{name}_b"),
            )

        w1, b1 = layer(n_in, h1, "reg1")
        w2, b2 = layer(h1, h2, "reg2")
        w3, b3 = layer(h2, THETA_DIM, "reg3")
        return cls(w1, b1, w2, b2, w3, b3, Tensor(np.zeros(THETA_DIM), name="mean_theta"))

    @property
    def channels(self) -> int:
        return self.w1.dims[0] - THETA_DIM

    def parameters(self) -> dict[str, Tensor]:
        return {
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": self.b2,
            "w3": self.w3,
            "b3": self.b3,
            "mean_theta": self.mean_theta,
        }


def regress_sequence(z: Tensor, w: RegressorWeights, n_iter: int = 3) -> Tensor:
    """Parameters for every frame of a (T, C) feature sequence, as (T, 85).

    Starts from the learned mean estimate and applies ``n_iter`` additive
    feedback updates.
    """
    if n_iter < 0:
        raise ShapeError(f"regress_sequence: n_iter must be >= 0, got {n_iter}")
    if z.data.ndim != 2 or z.dims[1] != w.channels:
        raise ShapeError(
            f"regress_sequence: (T, {w.channels}) features expected, got {z.dims}"
        )
    theta = tile_rows(w.mean_theta, z.dims[0])
    for _ in range(n_iter):
        h = relu(linear(concat_cols([z, theta]), w.w1, w.b1))
        h = relu(linear(h, w.w2, w.b2))
        theta = add(theta, linear(h, w.w3, w.b3))
    return theta


def regress_iterative(z: Tensor, w: RegressorWeights, n_iter: int = 3) -> Tensor:
    """Single-frame variant: (C,) feature in, (85,) parameters out."""
    if z.data.ndim != 1:
        raise ShapeError(f"regress_iterative: (C,) feature expected, got {z.dims}")
    from .tensor import reshape

    row = reshape(z, (1, z.dims[0]))
    return reshape(regress_sequence(row, w, n_iter), (THETA_DIM,))


@dataclass
class ToyBodyModel:
    """Fixed linear skeleton: offsets are matrix products of (pose, shape).

    All constants are a pure function of the seed, so a checkpointed copy
    reproduces evaluation exactly. Joint 0 (the pelvis) is pinned to the
    body-frame origin.
    """

    rest_joints: np.ndarray  # (J, 3) mm
    rest_vertices: np.ndarray  # (V, 3) mm
    joint_pose_basis: np.ndarray  # (3J, 72)
    joint_shape_basis: np.ndarray  # (3J, 10)
    vertex_pose_basis: np.ndarray  # (3V, 72)
    vertex_shape_basis: np.ndarray  # (3V, 10)

    @classmethod
    def generate(cls, seed: int, n_joints: int = 14, n_vertices: int = 50) -> "ToyBodyModel":
        if n_joints < 1 or n_vertices < 1:
            raise ShapeError("toy body model needs at least one joint and vertex")
        rng = np.random.default_rng(seed)
        rest_joints = rng.normal(0.0, _REST_SPREAD, (n_joints, 3))
        rest_joints[0] = 0.0
        rest_vertices = rng.normal(0.0, _REST_SPREAD, (n_vertices, 3))
        jp = rng.normal(0.0, _POSE_GAIN / np.sqrt(POSE_DIM), (3 * n_joints, POSE_DIM))
        js = rng.normal(0.0, _SHAPE_GAIN / np.sqrt(SHAPE_DIM), (3 * n_joints, SHAPE_DIM))
        jp[:3] = 0.0  # pelvis does not move in the body frame
        js[:3] = 0.0
        vp = rng.normal(0.0, _POSE_GAIN / np.sqrt(POSE_DIM), (3 * n_vertices, POSE_DIM))
        vs = rng.normal(0.0, _SHAPE_GAIN / np.sqrt(SHAPE_DIM), (3 * n_vertices, SHAPE_DIM))
        return cls(rest_joints, rest_vertices, jp, js, vp, vs)

    @property
    def n_joints(self) -> int:
        return self.rest_joints.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.rest_vertices.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "rest_joints": self.rest_joints,
            "rest_vertices": self.rest_vertices,
            "joint_pose_basis": self.joint_pose_basis,
            "joint_shape_basis": self.joint_shape_basis,
            "vertex_pose_basis": self.vertex_pose_basis,
            "vertex_shape_basis": self.vertex_shape_basis,
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "ToyBodyModel":
        return cls(**{k: np.asarray(arrays[k], dtype=float) for k in cls.generate(0).arrays()})

    # plain-numpy forward, used by the data generator and the metrics side
    def joints_of(self, params: np.ndarray) -> np.ndarray:
        """(..., 85) parameters -> (..., J, 3) joints; camera is ignored."""
        params = np.asarray(params, dtype=float)
        pose = params[..., :POSE_DIM]
        shape = params[..., POSE_DIM : POSE_DIM + SHAPE_DIM]
        flat = pose @ self.joint_pose_basis.T + shape @ self.joint_shape_basis.T
        return self.rest_joints + flat.reshape(*params.shape[:-1], self.n_joints, 3)

    def vertices_of(self, params: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        pose = params[..., :POSE_DIM]
        shape = params[..., POSE_DIM : POSE_DIM + SHAPE_DIM]
        flat = pose @ self.vertex_pose_basis.T + shape @ self.vertex_shape_basis.T
        return self.rest_vertices + flat.reshape(*params.shape[:-1], self.n_vertices, 3)


def toy_body_model(params: BodyParams, model: ToyBodyModel) -> tuple[np.ndarray, np.ndarray]:
    """One frame's (joints (J, 3), vertices (V, 3)) from its parameters."""
    vec = params.as_vector()
    return model.joints_of(vec), model.vertices_of(vec)


def body_joints(pose: Tensor, shape: Tensor, model: ToyBodyModel) -> Tensor:
    """Differentiable joints for a sequence: (T, 72) + (T, 10) -> (T, 3J)."""
    return _body_points(pose, shape, model.rest_joints, model.joint_pose_basis, model.joint_shape_basis)


def body_vertices(pose: Tensor, shape: Tensor, model: ToyBodyModel) -> Tensor:
    """Differentiable vertices for a sequence: (T, 72) + (T, 10) -> (T, 3V)."""
    return _body_points(pose, shape, model.rest_vertices, model.vertex_pose_basis, model.vertex_shape_basis)


def _body_points(pose, shape, rest, pose_basis, shape_basis):
    if pose.data.ndim != 2 or pose.dims[1] != POSE_DIM:
        raise ShapeError(f"body model: (T, {POSE_DIM}) pose expected, got {pose.dims}")
    if shape.dims != (pose.dims[0], SHAPE_DIM):
        raise ShapeError(f"body model: (T, {SHAPE_DIM}) shape expected, got {shape.dims}")
    offset = add(
        matmul(pose, Tensor(pose_basis.T)),
        matmul(shape, Tensor(shape_basis.T)),
    )
    return add(offset, tile_rows(Tensor(rest.reshape(-1)), pose.dims[0]))


def project_weak_perspective(joints3d: np.ndarray, camera: np.ndarray) -> np.ndarray:
    """(u, v) = (s*x + tx, s*y + ty); depth is discarded.

    Accepts a single frame ((J, 3) with (3,) camera) or a sequence
    ((T, J, 3) with (T, 3) camera).
    """
    joints3d = np.asarray(joints3d, dtype=float)
    camera = np.asarray(camera, dtype=float)
    if joints3d.ndim == 2:
        s, tx, ty = camera
        return np.stack([s * joints3d[:, 0] + tx, s * joints3d[:, 1] + ty], axis=-1)
    if joints3d.ndim == 3 and camera.shape == (joints3d.shape[0], 3):
        s = camera[:, 0:1]
        return np.stack(
            [s * joints3d[:, :, 0] + camera[:, 1:2], s * joints3d[:, :, 1] + camera[:, 2:3]],
            axis=-1,
        )
    raise ShapeError(
        f"project_weak_perspective: got joints {joints3d.shape} with camera {camera.shape}"
    )


def project_sequence(joints_flat: Tensor, camera: Tensor) -> Tensor:
    """Differentiable projection of a sequence.

    ``joints_flat`` is (T, 3J) with xyz interleaved per joint; ``camera`` is
    (T, 3) rows of (s, tx, ty). Returns (T, 2J) with uv interleaved.
    """
    if joints_flat.data.ndim != 2 or joints_flat.dims[1] % 3 != 0:
        raise ShapeError(f"project_sequence: (T, 3J) joints expected, got {joints_flat.dims}")
    n_frames = joints_flat.dims[0]
    if camera.dims != (n_frames, 3):
        raise ShapeError(f"project_sequence: (T, 3) camera expected, got {camera.dims}")
    n_joints = joints_flat.dims[1] // 3

    pts = joints_flat.data.reshape(n_frames, n_joints, 3)
    s = camera.data[:, 0][:, None]
    u = s * pts[:, :, 0] + camera.data[:, 1][:, None]
    v = s * pts[:, :, 1] + camera.data[:, 2][:, None]
    out_data = np.stack([u, v], axis=-1).reshape(n_frames, 2 * n_joints)

    out = _node(out_data, (joints_flat, camera))

    def _bwd():
        g = out.grad.reshape(n_frames, n_joints, 2)
        gj = np.zeros((n_frames, n_joints, 3))
        gj[:, :, 0] = s * g[:, :, 0]
        gj[:, :, 1] = s * g[:, :, 1]
        joints_flat.grad += gj.reshape(n_frames, 3 * n_joints)
        camera.grad[:, 0] += np.sum(g[:, :, 0] * pts[:, :, 0] + g[:, :, 1] * pts[:, :, 1], axis=1)
        camera.grad[:, 1] += g[:, :, 0].sum(axis=1)
        camera.grad[:, 2] += g[:, :, 1].sum(axis=1)

    out._backward = _bwd
    return out
