"""Binary checkpoint format: named float32 tensors.

Layout (all little-endian): magic "MPSN", u32 format version, u32 tensor
count, then per tensor a u32 name length, UTF-8 name bytes, u32 rank, u32
dims, and float32 data. Values round-trip exactly at 32-bit resolution.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (
    CheckpointCorruptError,
    CheckpointFormatError,
    CheckpointVersionError,
)

CHECKPOINT_MAGIC = b"MPSN"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, tensors: dict[str, np.ndarray]) -> None:
    """Write named arrays; the file is assembled in memory and written once."""
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read named arrays back as float64 (exact lift of the stored float32)."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint file (bad magic)")
    offset = 4

    def take(n, what):
        nonlocal offset
        if offset + n > len(raw):
            raise CheckpointCorruptError(f"{path}: truncated while reading {what}")
        piece = raw[offset : offset + n]
        offset += n
        return piece

    version, count = struct.unpack("<II", take(8, "header"))
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(version, CHECKPOINT_VERSION)
    tensors: dict[str, np.ndarray] = {}
    for i in range(count):
        (name_len,) = struct.unpack("<I", take(4, f"tensor {i} name length"))
        name = take(name_len, f"tensor {i} name").decode("utf-8")
        (rank,) = struct.unpack("<I", take(4, f"{name} rank"))
        dims = struct.unpack(f"<{rank}I", take(4 * rank, f"{name} dims"))
        n_items = int(np.prod(dims, dtype=np.int64)) if rank else 1
        buf = take(4 * n_items, f"{name} data")
        tensors[name] = np.frombuffer(buf, dtype="<f4").astype(np.float64).reshape(dims)
    if offset != len(raw):
        raise CheckpointCorruptError(f"{path}: {len(raw) - offset} trailing bytes")
    return tensors
