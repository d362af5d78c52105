"""Command-line front end.

Subcommands: ``gen-data``, ``train``, ``eval``, ``export-maps``,
``grad-check``, ``count-params``. Exit codes: 0 success, 1 usage or
configuration error, 2 data or file-format error. Report paths write
delimited text plus a rendered matplotlib figure next to it.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, SEED_ENV_VAR, resolve_seed
from .counting import count_params
from .errors import ConfigError, DataFormatError
from .hafi import HafiConfig, HafiWeights, hafi_refine_all
from .losses import DiscriminatorWeights, LossWeights, adversarial_losses, loss_supervised
from .metrics import METRIC_NAMES, acc_err, metric_report_lines, mpjpe, mpvpe, pa_mpjpe
from .moca import MocaConfig, MocaWeights, attention_maps, moca_forward
from .pipeline import evaluate_model
from .regressor import RegressorWeights, regress_sequence
from .synth import VAL_SEED_OFFSET, make_dataset, read_dataset
from .tensor import Tensor, grad_check, mse
from .train import load_model, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motionattn",
        description="Temporal-attention pose pipeline: data synthesis, training, "
        "evaluation, map export, gradient checking, parameter counting.",
        epilog=f"Seed precedence: --seed flag, then {SEED_ENV_VAR}, then the config file.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset file")
    p.add_argument("--config", required=True, help="run configuration (INI)")
    p.add_argument("--out", required=True, help="output dataset path (.msyn)")
    p.add_argument("--split", choices=("train", "val"), default="train",
                   help="seed range and sequence count to draw from")
    p.add_argument("--count", type=int, default=None, help="override sequence count")
    p.add_argument("--seed", type=int, default=None, help="override data seed")

    p = sub.add_parser("train", help="train a model and write checkpoints + report")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--train-data", default=None, help="override data.train_path")
    p.add_argument("--val-data", default=None, help="override data.val_path")
    p.add_argument("--seed", type=int, default=None, help="override train seed")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", default=None,
                   help="also write per-sequence metrics CSV and figure here")

    p = sub.add_parser("export-maps", help="export attention maps for one sequence")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--index", type=int, default=0, help="sequence index in the dataset")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("grad-check", help="finite-difference checks of every learnable path")
    p.add_argument("--seeds", type=int, default=5, help="number of seeded checks per path")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--step", type=float, default=1e-5, help="central-difference step h")

    p = sub.add_parser("count-params", help="per-module parameter counts")
    p.add_argument("--config", required=True)
    p.add_argument("--full-scale", action="store_true",
                   help="use reference-scale shapes plus the backbone constant")
    return parser


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


def _dispatch(args) -> int:
    if args.command == "gen-data":
        return _cmd_gen_data(args)
    if args.command == "train":
        return _cmd_train(args)
    if args.command == "eval":
        return _cmd_eval(args)
    if args.command == "export-maps":
        return _cmd_export_maps(args)
    if args.command == "grad-check":
        return _cmd_grad_check(args)
    if args.command == "count-params":
        return _cmd_count_params(args)
    raise AssertionError(f"unhandled command {args.command}")


def _cmd_gen_data(args) -> int:
    cfg = RunConfig.load(args.config)
    seed = resolve_seed(args.seed, cfg.data.seed)
    if args.split == "val":
        count = cfg.data.n_val if args.count is None else args.count
        seed += VAL_SEED_OFFSET
    else:
        count = cfg.data.n_train if args.count is None else args.count
    summary = make_dataset(cfg.synth_config(), count, seed, args.out)
    print(
        f"wrote {summary['sequences']} sequences "
        f"({summary['frames']} frames, {summary['bytes']} bytes) to {summary['path']}"
    )
    return 0


def _cmd_train(args) -> int:
    cfg = RunConfig.load(args.config)
    cfg.train.seed = resolve_seed(args.seed, cfg.train.seed)
    train_path = args.train_data or cfg.data.train_path
    val_path = args.val_data or cfg.data.val_path
    result = train(cfg, train_path, val_path, args.out_dir)
    for row in result.rows:
        print(",".join(row.as_csv()))
    print(f"final checkpoint: {result.checkpoint_path}")
    print(f"report: {result.report_path}")
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.checkpoint)
    records = read_dataset(args.data)
    if not records:
        raise DataFormatError(f"{args.data}: dataset has no records")
    metrics = evaluate_model(model, records)
    for line in metric_report_lines(metrics):
        print(line)
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        per_seq = {name: [] for name in METRIC_NAMES}
        for rec in records:
            result = model.forward(rec.features)
            pj, pv = result.joints3d(), result.vertices3d()
            per_seq["MPJPE"].append(mpjpe(pj, rec.joints3d))
            per_seq["PA-MPJPE"].append(pa_mpjpe(pj, rec.joints3d))
            per_seq["MPVPE"].append(mpvpe(pv, rec.vertices))
            per_seq["ACC-ERR"].append(acc_err(pj, rec.joints3d))
        csv_path = out_dir / "eval_metrics.csv"
        with csv_path.open("w") as fh:
            fh.write("sequence," + ",".join(METRIC_NAMES) + "\n")
            for i in range(len(records)):
                fh.write(
                    f"{i},"
                    + ",".join(f"{per_seq[name][i]:.10g}" for name in METRIC_NAMES)
                    + "\n"
                )
        from .plotting import save_eval_figure

        save_eval_figure(per_seq, out_dir / "eval_metrics.png")
        print(f"per-sequence report: {csv_path}")
    return 0


def write_map_csv(path, values: np.ndarray) -> None:
    """T rows of T comma-separated decimals, full precision."""
    with Path(path).open("w") as fh:
        for row in values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def write_map_pgm(path, values: np.ndarray) -> None:
    """8-bit binary PGM, min-max scaled; a flat map becomes all zeros."""
    values = np.asarray(values, dtype=float)
    h, w = values.shape
    lo, hi = values.min(), values.max()
    if hi > lo:
        pixels = np.round(255.0 * (values - lo) / (hi - lo)).astype(np.uint8)
    else:
        pixels = np.zeros((h, w), dtype=np.uint8)
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def export_maps(checkpoint_path, data_path, index: int, out_dir) -> list[Path]:
    """Write the three T x T maps of one sequence as CSV + PGM (+ one PNG)."""
    model = load_model(checkpoint_path)
    records = read_dataset(data_path)
    if not 0 <= index < len(records):
        raise DataFormatError(
            f"{data_path}: sequence index {index} out of range (dataset has {len(records)})"
        )
    maps = attention_maps(Tensor(records[index].features), model.moca, model.moca_cfg)
    arrays = {name: t.data for name, t in maps.items()}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, values in arrays.items():
        csv_path = out_dir / f"{name}.csv"
        pgm_path = out_dir / f"{name}.pgm"
        write_map_csv(csv_path, values)
        write_map_pgm(pgm_path, values)
        written += [csv_path, pgm_path]
    from .plotting import save_map_figure

    written.append(save_map_figure(arrays, out_dir / "maps.png"))
    return written


def _cmd_export_maps(args) -> int:
    for path in export_maps(args.checkpoint, args.data, args.index, args.out_dir):
        print(f"wrote {path}")
    return 0


# base of the seeded rng stream for grad-check points; chosen so all check
# points sit well clear of relu kinks at the h=1e-5 step
_CHECK_SEED_BASE = 9500


def gradient_check_paths(n_seeds: int = 5, tol: float = 1e-5, h: float = 1e-5):
    """Central-difference checks over every learnable path, at small shapes.

    Yields (path name, seed, GradReport). Used by the grad-check subcommand
    and by the acceptance suite.
    """
    t, c = 4, 6
    for seed in range(n_seeds):
        rng = np.random.default_rng(_CHECK_SEED_BASE + seed)
        x = Tensor(rng.uniform(-1, 1, (t, c)))
        target = Tensor(rng.uniform(-1, 1, (t, c)))

        moca_cfg = MocaConfig(channels=c, reduction=2)
        moca_w = MocaWeights.init(moca_cfg, seed)
        moca_w.w_z = Tensor(rng.uniform(-0.3, 0.3, (c // 2, c)), name="w_z")
        yield "moca", seed, grad_check(
            lambda: mse(moca_forward(x, moca_w, moca_cfg), target),
            list(moca_w.parameters().values()), h=h, tol=tol,
        )

        hafi_cfg = HafiConfig(frames_per_group=3, resize_channels=3)
        hafi_w = HafiWeights.init(c, hafi_cfg, seed)
        yield "hafi", seed, grad_check(
            lambda: mse(hafi_refine_all(x, hafi_w, hafi_cfg), target),
            list(hafi_w.parameters().values()), h=h, tol=tol,
        )

        reg_w = RegressorWeights.init(c, seed, hidden=(16, 16))
        reg_target = Tensor(rng.uniform(-1, 1, (t, 85)))
        yield "regressor", seed, grad_check(
            lambda: mse(regress_sequence(x, reg_w, n_iter=3), reg_target),
            list(reg_w.parameters().values()), h=h, tol=tol,
        )

        pred = tuple(Tensor(rng.uniform(-1, 1, (t, n))) for n in (85, 9, 6))
        gt = tuple(Tensor(rng.uniform(-1, 1, (t, n))) for n in (85, 9, 6))
        lw = LossWeights(0.8, 1.2, 0.5, 1.0)
        yield "losses", seed, grad_check(
            lambda: loss_supervised(*pred, *gt, lw)[0], list(pred), h=h, tol=tol,
        )

        disc = DiscriminatorWeights.init(t * 72, seed, hidden=(12, 8))
        real = [Tensor(rng.uniform(-1, 1, (t, 72))) for _ in range(2)]
        fake = [Tensor(rng.uniform(-1, 1, (t, 72))) for _ in range(2)]
        yield "discriminator", seed, grad_check(
            lambda: adversarial_losses(disc, real, fake)[1],
            list(disc.parameters().values()), h=h, tol=tol,
        )


def _cmd_grad_check(args) -> int:
    failures = 0
    for name, seed, report in gradient_check_paths(args.seeds, args.tol, args.step):
        status = "PASS" if report.passed else "FAIL"
        print(f"{status} {name:14s} seed {seed}  max rel err {report.worst():.3e}")
        failures += 0 if report.passed else 1
    print(f"{'all paths pass' if failures == 0 else f'{failures} checks failed'} "
          f"(h={args.step}, tol={args.tol})")
    return 0 if failures == 0 else 1


def _cmd_count_params(args) -> int:
    cfg = RunConfig.load(args.config)
    report = count_params(cfg.model, full_scale=args.full_scale)
    scale = "full-scale" if args.full_scale else "configured"
    print(f"parameter counts ({scale} shapes):")
    for line in report.lines():
        print(f"  {line}")
    print("assumptions:")
    for item in report.assumptions:
        print(f"  - {item}")
    return 0
