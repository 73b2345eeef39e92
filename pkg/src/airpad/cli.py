"""Command-line entry points: synth, train, eval, simulate, gradcheck, serve."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .dataset import AugmentConfig, SynthConfig, build_dataset, load_dataset, save_dataset
from .errors import AirpadError
from .gesture import SegmentEventKind, Segmenter, normalize_trace, rasterize, reconstruct
from .nn import TrainConfig, evaluate, load_model, predict, save_model, train
from .sensing import SensorConfig, SensorSimulator, calibration_run, load_trajectory, write_frames_csv

GENERATOR_SEED_ENV = "AIRPAD_SEED"
# CNNs train with mini-batches of 64, the MLP and the LSTM-based model with
# 32; cnn-aug and rnn see augmented batches.
MODEL_RECIPES = {
    "cnn-aug": ("cnn", 64, True),
    "cnn": ("cnn", 64, False),
    "mlp": ("mlp", 32, False),
    "rnn": ("rnn", 32, True),
}


def _default_seed() -> int:
    env = os.environ.get(GENERATOR_SEED_ENV)
    return int(env) if env else 0


def cmd_synth(args) -> int:
    cfg = SynthConfig(per_class=args.per_class, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(f"synthesizing {10 * args.per_class} gestures (seed {args.seed})...")

    def progress(done, total):
        if done % 500 == 0 or done == total:
            print(f"  {done}/{total}")

    train_ds, test_ds = build_dataset(cfg, progress=progress)
    for split, ds in (("train", train_ds), ("test", test_ds)):
        manifest = {
            "seed": cfg.seed,
            "per_class": cfg.per_class,
            "split": split,
            "generator_version": ds.meta.get("generator_version"),
        }
        save_dataset(ds, out / f"{split}.apds", manifest=manifest)
    print(f"wrote {len(train_ds)} train / {len(test_ds)} test images to {out}")
    return 0


def cmd_train(args) -> int:
    base_id, default_batch, default_aug = MODEL_RECIPES[args.model]
    augment = default_aug if args.augment is None else args.augment
    data_dir = Path(args.data)
    train_ds = load_dataset(data_dir / "train.apds")
    test_ds = load_dataset(data_dir / "test.apds")
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch or default_batch,
        lr=args.lr,
        seed=args.seed,
        augment=AugmentConfig(seed=args.seed) if augment else None,
    )
    print(
        f"training {args.model} on {len(train_ds)} images "
        f"(epochs {cfg.epochs}, batch {cfg.batch_size}, lr {cfg.lr}, "
        f"augment {'on' if augment else 'off'})"
    )

    def progress(stats):
        print(
            f"  epoch {stats.epoch:3d}  train {stats.train_loss:.4f}/{stats.train_acc:.4f}"
            f"  val {stats.val_loss:.4f}/{stats.val_acc:.4f}"
        )

    bundle, report = train(base_id, train_ds, test_ds, cfg, progress=progress)
    bundle.metadata["trained_as"] = args.model
    save_model(bundle, args.out)
    print(f"saved model to {args.out} ({report.wall_time_s:.1f}s)")
    if args.metrics:
        report.to_csv(args.metrics)
        print(f"wrote per-epoch metrics to {args.metrics}")
    return 0


def cmd_eval(args) -> int:
    bundle = load_model(args.model)
    data_dir = Path(args.data)
    ds = load_dataset(data_dir / f"{args.split}.apds")
    loss, acc, cm = evaluate(bundle, ds)
    print(f"{args.split} loss {loss:.4f}  accuracy {acc:.4f}  ({cm.total} images)")
    if args.confusion:
        cm.to_csv(args.confusion)
        print(f"wrote confusion matrix to {args.confusion}")
    return 0


def cmd_simulate(args) -> int:
    trajectory = load_trajectory(args.traj)
    sim = SensorSimulator(SensorConfig(seed=args.seed))
    t_end = calibration_run(sim)
    sim.reset()
    shift = t_end + 0.02 - trajectory[0].t_s if args.rebase else 0.0
    if shift:
        from .sensing import HandSample

        trajectory = [
            HandSample(s.x_cm, s.y_cm, s.z_cm, s.t_s + shift) for s in trajectory
        ]
    frames = sim.run(trajectory)
    print(f"simulated {len(frames)} frames from {len(trajectory)} samples")
    if args.frames:
        write_frames_csv(frames, args.frames)
        print(f"wrote frames to {args.frames}")
    if args.classify:
        if not args.model:
            print("--classify requires --model", file=sys.stderr)
            return 2
        bundle = load_model(args.model)
        seg = Segmenter()
        count = 0
        for f in frames:
            ev = seg.step(reconstruct(f))
            if ev.kind is SegmentEventKind.COMPLETED:
                count += 1
                image = rasterize(normalize_trace(ev.trace))
                digit, conf, _ = predict(bundle, image)
                print(f"gesture {count}: digit {digit} (confidence {conf:.1%})")
        if count == 0:
            print("no complete gesture found in trajectory")
    return 0


def cmd_gradcheck(args) -> int:
    from .nn.gradcheck import run_all

    results = run_all(seed=args.seed)
    failed = False
    for name, err in results.items():
        ok = err <= 1e-4
        failed |= not ok
        print(f"{name:18s} max rel err {err:.3e}  {'ok' if ok else 'FAIL'}")
    return 1 if failed else 0


def cmd_serve(args) -> int:
    from .server import run_server

    bundle = load_model(args.model) if args.model else None
    if bundle is None:
        print("serving without a model: classification disabled", file=sys.stderr)
    run_server(
        bundle,
        host=args.host,
        port=args.port,
        static_dir=args.static,
        timeout_s=args.session_timeout,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airpad",
        description="Touchless capacitive pad simulator and digit recognizer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a labeled gesture dataset")
    p.add_argument("--per-class", type=int, default=1000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a classifier on a dataset directory")
    p.add_argument("--model", choices=sorted(MODEL_RECIPES), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=None, help="default: per-model recipe")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", default=None)
    aug = p.add_mutually_exclusive_group()
    aug.add_argument("--augment", dest="augment", action="store_true", default=None)
    aug.add_argument("--no-augment", dest="augment", action="store_false")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--confusion", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="replay a trajectory file through the sensor")
    p.add_argument("--traj", required=True)
    p.add_argument("--frames", default=None)
    p.add_argument("--classify", action="store_true")
    p.add_argument("--model", default=None)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument(
        "--no-rebase",
        dest="rebase",
        action="store_false",
        help="feed trajectory timestamps as-is instead of after calibration",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gradcheck", help="finite-difference check of every layer")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("serve", help="serve the live classification API and UI")
    p.add_argument("--port", type=int, default=8760)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--model", default=None)
    p.add_argument("--static", default=None)
    p.add_argument("--session-timeout", type=float, default=300.0)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AirpadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
