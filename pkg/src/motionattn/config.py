"""Run configuration: an INI file with ``model``, ``train``, and ``data``
sections, validated against a closed schema (unknown sections or keys are
rejected, and module invariants are checked before any computation starts).

Seed precedence for the CLI is flag > MOTION_ATTN_SEED environment variable
> config file.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ShapeError
from .hafi import HafiConfig
from .moca import AttentionMode, MocaConfig
from .synth import SynthConfig

SEED_ENV_VAR = "MOTION_ATTN_SEED"


@dataclass
class ModelSettings:
    channels: int = 64
    seq_len: int = 16
    reduction_ratio: int = 2
    mode: AttentionMode = AttentionMode.MOCA
    use_hafi: bool = True
    detach_nssm: bool = False
    frames_per_group: int = 3
    resize_channels: int | None = None  # default: channels // 8
    n_iter: int = 3

    def resolved_resize_channels(self) -> int:
        if self.resize_channels is not None:
            return self.resize_channels
        return max(1, self.channels // 8)


@dataclass
class TrainSettings:
    # desk-scale default rates; the full-scale reference rates (5e-5 /
    # 1e-4) are far too slow for a 5-epoch toy run but remain expressible
    # via config
    lr: float = 1e-3
    disc_lr: float = 2e-3
    batch: int = 8
    epochs: int = 5
    patience: int = 5
    lr_decay_factor: float = 10.0
    w_params: float = 1.0
    w_3d: float = 1.0
    w_2d: float = 1.0
    w_adv: float = 1.0
    seed: int = 1
    clip_norm: float = 0.0  # 0 disables clipping


@dataclass
class DataSettings:
    n_train: int = 500
    n_val: int = 100
    seed: int = 0
    n_harmonics: int = 3
    amplitude: float = 2.5
    continuity_bound: float = 40.0
    noise: float = 0.05
    joints: int = 14
    vertices: int = 50
    fps: float = 25.0
    body_seed: int = 2024
    train_path: str = "train.msyn"
    val_path: str = "val.msyn"


# section -> ini key -> (dataclass field, parser)
def _int(v):
    return int(v)


def _float(v):
    return float(v)


def _bool(v):
    lowered = v.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _mode(v):
    try:
        return AttentionMode(v.strip().upper())
    except ValueError:
        options = ", ".join(m.value for m in AttentionMode)
        raise ValueError(f"mode must be one of {options}, got {v!r}") from None


def _str(v):
    return v.strip()


SCHEMA = {
    "model": {
        "channels": ("channels", _int),
        "seq_len": ("seq_len", _int),
        "reduction_ratio": ("reduction_ratio", _int),
        "mode": ("mode", _mode),
        "use_hafi": ("use_hafi", _bool),
        "detach_nssm": ("detach_nssm", _bool),
        "hafi.frames_per_group": ("frames_per_group", _int),
        "hafi.resize_channels": ("resize_channels", _int),
        "regressor.n_iter": ("n_iter", _int),
    },
    "train": {
        "lr": ("lr", _float),
        "disc_lr": ("disc_lr", _float),
        "batch": ("batch", _int),
        "epochs": ("epochs", _int),
        "patience": ("patience", _int),
        "lr_decay_factor": ("lr_decay_factor", _float),
        "w_params": ("w_params", _float),
        "w_3d": ("w_3d", _float),
        "w_2d": ("w_2d", _float),
        "w_adv": ("w_adv", _float),
        "seed": ("seed", _int),
        "clip_norm": ("clip_norm", _float),
    },
    "data": {
        "n_train": ("n_train", _int),
        "n_val": ("n_val", _int),
        "seed": ("seed", _int),
        "n_harmonics": ("n_harmonics", _int),
        "amplitude": ("amplitude", _float),
        "continuity_bound": ("continuity_bound", _float),
        "noise": ("noise", _float),
        "joints": ("joints", _int),
        "vertices": ("vertices", _int),
        "fps": ("fps", _float),
        "body_seed": ("body_seed", _int),
        "train_path": ("train_path", _str),
        "val_path": ("val_path", _str),
    },
}

_SECTION_TYPES = {"model": ModelSettings, "train": TrainSettings, "data": DataSettings}


@dataclass
class RunConfig:
    model: ModelSettings = field(default_factory=ModelSettings)
    train: TrainSettings = field(default_factory=TrainSettings)
    data: DataSettings = field(default_factory=DataSettings)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keep key case and dots verbatim
        try:
            parser.read_string(path.read_text(), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None

        cfg = cls()
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            target = getattr(cfg, section)
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
                attr, parse = SCHEMA[section][key]
                try:
                    setattr(target, attr, parse(raw))
                except ValueError as exc:
                    raise ConfigError(f"{path}: [{section}] {key}: {exc}") from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Check schema ranges and the invariants of the modules the values
        feed, before anything is computed."""
        m, t, d = self.model, self.train, self.data
        try:
            MocaConfig(
                channels=m.channels,
                reduction=m.reduction_ratio,
                mode=m.mode,
                detach_nssm=m.detach_nssm,
            )
            if m.use_hafi:
                HafiConfig(
                    frames_per_group=m.frames_per_group,
                    resize_channels=m.resolved_resize_channels(),
                )
            self.synth_config()
        except ShapeError as exc:
            raise ConfigError(str(exc)) from None
        if m.seq_len < 1:
            raise ConfigError("model.seq_len must be positive")
        if m.n_iter < 0:
            raise ConfigError("regressor.n_iter must be >= 0")
        for name, value in (("batch", t.batch), ("epochs", t.epochs), ("patience", t.patience)):
            if value < 1:
                raise ConfigError(f"train.{name} must be >= 1")
        if t.lr <= 0 or t.disc_lr <= 0:
            raise ConfigError("train.lr and train.disc_lr must be positive")
        if t.lr_decay_factor <= 1:
            raise ConfigError("train.lr_decay_factor must be > 1")
        if min(t.w_params, t.w_3d, t.w_2d, t.w_adv) < 0:
            raise ConfigError("loss weights must be nonnegative")
        if t.clip_norm < 0:
            raise ConfigError("train.clip_norm must be >= 0 (0 disables)")
        if d.n_train < 0 or d.n_val < 0:
            raise ConfigError("data.n_train and data.n_val must be nonnegative")

    def synth_config(self) -> SynthConfig:
        d = self.data
        return SynthConfig(
            seq_len=self.model.seq_len,
            n_joints=d.joints,
            n_vertices=d.vertices,
            channels=self.model.channels,
            seed=d.seed,
            n_harmonics=d.n_harmonics,
            amplitude=d.amplitude,
            continuity_bound=d.continuity_bound,
            noise_sigma=d.noise,
            fps=d.fps,
            body_seed=d.body_seed,
        )

    def model_kwargs(self) -> dict:
        m = self.model
        return {
            "channels": m.channels,
            "reduction": m.reduction_ratio,
            "mode": m.mode,
            "detach_nssm": m.detach_nssm,
            "use_hafi": m.use_hafi,
            "frames_per_group": m.frames_per_group,
            "resize_channels": m.resolved_resize_channels(),
            "n_iter": m.n_iter,
        }


def resolve_seed(flag_value: int | None, config_value: int) -> int:
    """Seed precedence: explicit flag, then MOTION_ATTN_SEED, then config."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return config_value
