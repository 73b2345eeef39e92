"""Training and evaluation loops with per-epoch metrics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..dataset import AugmentConfig, Dataset, augment_batch
from ..errors import ConfigError, DivergenceDetected
from .adam import Adam
from .functional import cross_entropy, softmax, softmax_ce_grad
from .models import Model, ModelBundle, ModelSpec, build_model, model_spec


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    augment: AugmentConfig | None = None

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.lr < 0:
            raise ConfigError("invalid training configuration")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,train_loss,train_acc,val_loss,val_acc\n")
            for e in self.epochs:
                fh.write(
                    f"{e.epoch},{e.train_loss:.6f},{e.train_acc:.6f},"
                    f"{e.val_loss:.6f},{e.val_acc:.6f}\n"
                )


@dataclass
class ConfusionMatrix:
    """10x10 counts; rows are true classes, columns predicted."""

    counts: np.ndarray

    @classmethod
    def empty(cls) -> "ConfusionMatrix":
        return cls(np.zeros((10, 10), dtype=np.int64))

    def add(self, true_labels: np.ndarray, pred_labels: np.ndarray) -> None:
        np.add.at(self.counts, (true_labels, pred_labels), 1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        total = self.total
        return float(np.trace(self.counts)) / total if total else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.counts:
                fh.write(",".join(str(int(v)) for v in row) + "\n")


def _as_arrays(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, Dataset):
        return data.to_float()
    x, y = data
    x = np.asarray(x, dtype=np.float32)
    if x.ndim == 3:
        x = x[:, None]
    return x, np.asarray(y, dtype=np.int64)


def _eval_model(model: Model, x: np.ndarray, y: np.ndarray, batch_size: int = 512):
    cm = ConfusionMatrix.empty()
    loss_sum = 0.0
    for lo in range(0, len(x), batch_size):
        xb = x[lo : lo + batch_size].astype(model.dtype, copy=False)
        yb = y[lo : lo + batch_size]
        probs = model.predict_proba(xb)
        loss_sum += cross_entropy(probs, yb) * len(yb)
        cm.add(yb, probs.argmax(axis=1))
    n = len(x)
    return (loss_sum / n if n else 0.0), cm.accuracy, cm


def evaluate(bundle: ModelBundle, data, batch_size: int = 512):
    """(mean cross-entropy, accuracy, confusion matrix) on a dataset."""
    x, y = _as_arrays(data)
    return _eval_model(bundle.model, x, y, batch_size)


def train(
    spec: ModelSpec | str,
    train_data,
    val_data,
    cfg: TrainConfig | None = None,
    progress=None,
) -> tuple[ModelBundle, TrainReport]:
    """Mini-batch Adam training with optional on-the-fly augmentation.

    Per-epoch train metrics are running means over the (augmented) batches;
    validation uses inference mode. Deterministic for a fixed seed.
    """
    cfg = cfg or TrainConfig()
    if isinstance(spec, str):
        spec = model_spec(spec)
    x, y = _as_arrays(train_data)
    if len(x) == 0:
        raise ConfigError("training data is empty")
    xv, yv = _as_arrays(val_data)

    rng = np.random.default_rng(cfg.seed)
    model = build_model(spec, rng=rng, dtype=np.float32)
    optimizer = Adam(lr=cfg.lr)
    aug_rng = None
    if cfg.augment is not None:
        aug_rng = np.random.default_rng((cfg.seed, cfg.augment.seed, 0xA9))

    metadata = {
        "model_id": spec.model_id,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "lr": cfg.lr,
        "seed": cfg.seed,
        "augmented": cfg.augment is not None,
        "train_samples": int(len(x)),
    }
    report = TrainReport()
    start = time.perf_counter()
    for epoch in range(cfg.epochs):
        perm = rng.permutation(len(x))
        loss_sum = 0.0
        correct = 0
        for lo in range(0, len(x), cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            xb = x[idx]
            yb = y[idx]
            if aug_rng is not None:
                xb = augment_batch(xb, cfg.augment, aug_rng)
            logits = model.forward_logits(xb, train=True)
            probs = softmax(logits)
            batch_loss = cross_entropy(probs, yb)
            if not math.isfinite(batch_loss):
                report.wall_time_s = time.perf_counter() - start
                raise DivergenceDetected(
                    f"loss became non-finite at epoch {epoch}", report=report
                )
            loss_sum += batch_loss * len(yb)
            correct += int((probs.argmax(axis=1) == yb).sum())
            model.backward_from_logits(softmax_ce_grad(probs, yb).astype(model.dtype))
            optimizer.step(model.layers)
        # Evaluate at the training batch size so layer scratch buffers are
        # reused instead of reallocated between phases.
        val_loss, val_acc, _ = _eval_model(model, xv, yv, batch_size=cfg.batch_size)
        stats = EpochStats(
            epoch=epoch,
            train_loss=loss_sum / len(x),
            train_acc=correct / len(x),
            val_loss=val_loss,
            val_acc=val_acc,
        )
        report.epochs.append(stats)
        if progress is not None:
            progress(stats)
    report.wall_time_s = time.perf_counter() - start
    metadata["wall_time_s"] = round(report.wall_time_s, 3)
    if report.epochs:
        metadata["final_train_acc"] = report.epochs[-1].train_acc
        metadata["final_val_acc"] = report.epochs[-1].val_acc
    return ModelBundle(model=model, metadata=metadata), report
