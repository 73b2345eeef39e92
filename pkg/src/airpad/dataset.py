"""Synthetic gesture dataset: trajectory generation, simulation, augmentation.

Every labeled image is produced by running a jittered template trajectory
through the full sensing + gesture pipeline, so the dataset inherits sensor
noise, filter lag, and rasterization artifacts. RNG streams derive from
(seed, class, index) so results do not depend on generation order.
"""

from __future__ import annotations

import dataclasses
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, SegmentationFailure
from .gesture import (
    DigitImage,
    SegmentEventKind,
    Segmenter,
    normalize_trace,
    rasterize,
    reconstruct,
)
from .sensing import (
    ElectrodeLayout,
    HandSample,
    SensorConfig,
    SensorSimulator,
    calibration_run,
)
from .templates import TEMPLATES

GENERATOR_VERSION = 1
_MAGIC = b"APDS"
_HEADER = struct.Struct("<4sIIBB")
_MAX_ATTEMPTS = 5


@dataclass(frozen=True)
class SynthConfig:
    per_class: int = 1000
    jitter: float = 0.04
    speed_variation: float = 0.2
    z_far_cm: float = 8.0
    z_draw_cm: float = 2.5
    z_draw_amp_cm: float = 0.5
    draw_extent_cm: float = 5.6
    sample_rate_hz: float = 200.0
    split_ratio: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.per_class < 1:
            raise ConfigError("per_class must be >= 1")
        if not 0 < self.split_ratio < 1:
            raise ConfigError("split_ratio must be in (0, 1)")
        if self.jitter < 0 or self.speed_variation < 0:
            raise ConfigError("jitter and speed_variation must be >= 0")
        if not 0 < self.z_draw_cm - self.z_draw_amp_cm:
            raise ConfigError("drawing height must stay positive")
        if self.z_draw_cm + self.z_draw_amp_cm >= 4.0:
            raise ConfigError("drawing height must stay below the 4 cm threshold")
        if self.z_far_cm <= 4.0:
            raise ConfigError("z_far_cm must be above the 4 cm threshold")


@dataclass(frozen=True)
class AugmentConfig:
    rotation_deg: tuple[float, float] = (0.0, 180.0)
    zoom: tuple[float, float] = (0.9, 1.1)
    shift_frac: tuple[float, float] = (-0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.rotation_deg
        if not (-360 <= lo <= hi <= 360):
            raise ConfigError("rotation range must be ordered and within [-360, 360]")
        zlo, zhi = self.zoom
        if not 0 < zlo <= zhi:
            raise ConfigError("zoom range must be positive and ordered")
        slo, shi = self.shift_frac
        if slo > shi:
            raise ConfigError("shift range must be ordered")


def synth_trajectory(
    digit: int,
    cfg: SynthConfig,
    rng: np.random.Generator,
    t0: float = 0.0,
) -> list[HandSample]:
    """Approach, draw the jittered template, retract; sampled at 200 Hz.

    z starts at z_far, dips below the 4 cm threshold only during the draw
    phase, and ends above z_far, so the emitted profile crosses 4 cm exactly
    twice.
    """
    if digit not in TEMPLATES:
        raise ConfigError(f"no template for digit {digit!r}")
    template = np.array(TEMPLATES[digit].points, dtype=float)

    approach_s = rng.uniform(0.18, 0.30)
    retract_s = rng.uniform(0.18, 0.30)
    draw_s = rng.uniform(0.65, 1.35)
    speed_freq = rng.uniform(0.5, 1.5)
    speed_phase = rng.uniform(0.0, 2 * math.pi)
    z_amp = rng.uniform(0.0, cfg.z_draw_amp_cm)
    z_freq = rng.uniform(0.5, 1.5)
    z_phase = rng.uniform(0.0, 2 * math.pi)
    pts = template + rng.normal(0.0, cfg.jitter, size=template.shape)
    pts = np.clip(pts, 0.0, 1.0)

    # Arc-length parameterization of the jittered polyline.
    seg = np.diff(pts, axis=0)
    seg_len = np.sqrt((seg**2).sum(axis=1))
    arc = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = arc[-1]

    rate = cfg.sample_rate_hz
    n_draw = max(int(round(draw_s * rate)), 8)
    u = np.linspace(0.0, 1.0, n_draw)
    if cfg.speed_variation > 0 and total > 0:
        speed = 1.0 + cfg.speed_variation * np.sin(2 * math.pi * speed_freq * u + speed_phase)
        speed = np.maximum(speed, 0.2)
        warped = np.concatenate([[0.0], np.cumsum(speed[:-1])])
        u = warped / warped[-1]
    s_targets = u * total
    if total > 0:
        xs = np.interp(s_targets, arc, pts[:, 0])
        ys = np.interp(s_targets, arc, pts[:, 1])
    else:  # degenerate template after clipping; hold position
        xs = np.full(n_draw, pts[0, 0])
        ys = np.full(n_draw, pts[0, 1])

    ext = cfg.draw_extent_cm
    draw_x = (xs - 0.5) * ext
    draw_y = (ys - 0.5) * ext
    t_draw = np.arange(n_draw) / rate
    draw_z = cfg.z_draw_cm + z_amp * np.sin(2 * math.pi * z_freq * t_draw / draw_s + z_phase)

    n_app = max(int(round(approach_s * rate)), 2)
    ease = 0.5 - 0.5 * np.cos(np.pi * np.linspace(0.0, 1.0, n_app, endpoint=False))
    app_z = cfg.z_far_cm + (draw_z[0] - cfg.z_far_cm) * ease
    n_ret = max(int(round(retract_s * rate)), 2)
    ease_r = 0.5 - 0.5 * np.cos(np.pi * np.linspace(0.0, 1.0, n_ret))
    ret_z = draw_z[-1] + (cfg.z_far_cm + 0.5 - draw_z[-1]) * ease_r[1:]

    xs_all = np.concatenate([np.full(n_app, draw_x[0]), draw_x, np.full(n_ret - 1, draw_x[-1])])
    ys_all = np.concatenate([np.full(n_app, draw_y[0]), draw_y, np.full(n_ret - 1, draw_y[-1])])
    zs_all = np.concatenate([app_z, draw_z, ret_z])

    dt = 1.0 / rate
    return [
        HandSample(float(x), float(y), float(z), t0 + i * dt)
        for i, (x, y, z) in enumerate(zip(xs_all, ys_all, zs_all))
    ]


@dataclass
class Dataset:
    """Labeled 28x28 images stored as u8, the on-disk representation."""

    images: np.ndarray  # (N, 28, 28) uint8
    labels: np.ndarray  # (N,) uint8
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.uint8)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if self.images.ndim != 3 or self.images.shape[1:] != (28, 28):
            raise ValueError(f"images must be (N, 28, 28), got {self.images.shape}")
        if len(self.labels) != len(self.images):
            raise ValueError("images and labels length mismatch")

    def __len__(self) -> int:
        return len(self.images)

    def to_float(self) -> tuple[np.ndarray, np.ndarray]:
        """(N, 1, 28, 28) float32 in [0, 1] and int64 labels, for training."""
        x = (self.images.astype(np.float32) / 255.0)[:, None, :, :]
        return x, self.labels.astype(np.int64)


def _simulate_one(
    digit: int,
    cfg: SynthConfig,
    sensor_cfg: SensorConfig,
    layout: ElectrodeLayout | None,
    rng: np.random.Generator,
    sensor_seed: int,
) -> DigitImage:
    sim = SensorSimulator(dataclasses.replace(sensor_cfg, seed=sensor_seed), layout)
    t_end = calibration_run(sim)
    traj = synth_trajectory(digit, cfg, rng, t0=t_end + 0.02)
    frames = sim.run(traj)

    seg = Segmenter()
    completed = []
    for f in frames:
        ev = seg.step(reconstruct(f))
        if ev.kind is SegmentEventKind.COMPLETED:
            completed.append(ev.trace)
    if len(completed) != 1 or seg.active:
        raise SegmentationFailure(
            f"digit {digit}: trajectory produced {len(completed)} gestures"
        )
    return rasterize(normalize_trace(completed[0]), label=digit)


def build_dataset(
    cfg: SynthConfig,
    sensor_cfg: SensorConfig | None = None,
    layout: ElectrodeLayout | None = None,
    progress=None,
) -> tuple[Dataset, Dataset]:
    """Synthesize per_class gestures per digit and split them 8:2 stratified.

    Trajectories that fail to segment into exactly one gesture are counted
    and retried with a fresh derived stream; more than 1% failures aborts.
    """
    sensor_cfg = sensor_cfg or SensorConfig()
    total = 10 * cfg.per_class
    max_failures = max(int(0.01 * total), 0)
    failures = 0

    images = np.zeros((total, 28, 28), dtype=np.uint8)
    labels = np.zeros(total, dtype=np.uint8)
    pos = 0
    for digit in range(10):
        for idx in range(cfg.per_class):
            img = None
            for attempt in range(_MAX_ATTEMPTS):
                traj_rng = np.random.default_rng((cfg.seed, digit, idx, attempt, 1))
                sensor_seed = int(
                    np.random.SeedSequence((cfg.seed, digit, idx, attempt, 2)).generate_state(1)[0]
                )
                try:
                    img = _simulate_one(digit, cfg, sensor_cfg, layout, traj_rng, sensor_seed)
                    break
                except SegmentationFailure:
                    failures += 1
                    if failures > max_failures:
                        raise SegmentationFailure(
                            f"aborting build: {failures} failed trajectories "
                            f"out of {total} requested (>1%)"
                        )
            if img is None:
                raise SegmentationFailure(
                    f"digit {digit} index {idx}: no clean gesture in {_MAX_ATTEMPTS} attempts"
                )
            images[pos] = np.frombuffer(img.to_bytes(), dtype=np.uint8).reshape(28, 28)
            labels[pos] = digit
            pos += 1
            if progress is not None:
                progress(pos, total)

    n_train_pc = int(math.floor(cfg.per_class * cfg.split_ratio))
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for digit in range(10):
        split_rng = np.random.default_rng((cfg.seed, digit, 3))
        perm = split_rng.permutation(cfg.per_class) + digit * cfg.per_class
        train_idx.append(perm[:n_train_pc])
        test_idx.append(perm[n_train_pc:])
    tr = np.concatenate(train_idx)
    te = np.concatenate(test_idx)

    meta = {
        "seed": cfg.seed,
        "per_class": cfg.per_class,
        "generator_version": GENERATOR_VERSION,
        "segmentation_failures": failures,
    }
    train = Dataset(images[tr], labels[tr], meta=dict(meta, split="train"))
    test = Dataset(images[te], labels[te], meta=dict(meta, split="test"))
    return train, test


# -- augmentation -------------------------------------------------------------


def _draw_params(cfg: AugmentConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 4) rows of [rotation_rad, zoom, shift_rows, shift_cols] draws."""
    raw = rng.random((n, 4))
    lo = np.array(
        [math.radians(cfg.rotation_deg[0]), cfg.zoom[0], cfg.shift_frac[0], cfg.shift_frac[0]]
    )
    hi = np.array(
        [math.radians(cfg.rotation_deg[1]), cfg.zoom[1], cfg.shift_frac[1], cfg.shift_frac[1]]
    )
    return lo + raw * (hi - lo)


def _warp_batch(imgs: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Apply rotate-zoom-shift as one inverse-mapped affine with bilinear sampling."""
    b, h, w = imgs.shape
    cc = (h - 1) / 2.0
    theta = params[:, 0]
    zoom = params[:, 1]
    shift = params[:, 2:4] * np.array([h, w])  # (b, 2) in (rows, cols)

    cos_t = np.cos(theta) / zoom
    sin_t = np.sin(theta) / zoom
    # Inverse of A = zoom * R(theta) acting on (row, col) offsets.
    inv = np.stack(
        [np.stack([cos_t, sin_t], axis=1), np.stack([-sin_t, cos_t], axis=1)], axis=1
    )  # (b, 2, 2)

    rr, ccol = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    out_coords = np.stack([rr.ravel(), ccol.ravel()], axis=0).astype(float)  # (2, h*w)
    offs = out_coords[None] - cc - shift[:, :, None]  # (b, 2, h*w)
    src = np.einsum("bij,bjp->bip", inv, offs) + cc  # (b, 2, h*w)

    sr, sc = src[:, 0], src[:, 1]
    r0 = np.floor(sr).astype(int)
    c0 = np.floor(sc).astype(int)
    fr = sr - r0
    fc = sc - c0

    out = np.zeros((b, h * w), dtype=imgs.dtype)
    batch_ix = np.arange(b)[:, None]
    flat = imgs.reshape(b, -1)
    for dr in (0, 1):
        for dc in (0, 1):
            rr_ = r0 + dr
            cc_ = c0 + dc
            valid = (rr_ >= 0) & (rr_ < h) & (cc_ >= 0) & (cc_ < w)
            wgt = (fr if dr else 1 - fr) * (fc if dc else 1 - fc)
            idx = np.where(valid, rr_ * w + cc_, 0)
            out += wgt * np.where(valid, flat[batch_ix, idx], 0.0)
    return np.clip(out.reshape(b, h, w), 0.0, 1.0)


def augment(image: DigitImage, cfg: AugmentConfig, rng: np.random.Generator) -> DigitImage:
    """Random rotation about the center, zoom, and shift; label preserved."""
    params = _draw_params(cfg, rng, 1)
    warped = _warp_batch(image.pixels[None, :, :], params)[0]
    return DigitImage(pixels=warped, label=image.label)


def augment_batch(
    imgs: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator
) -> np.ndarray:
    """Batch counterpart of augment(); (B, 28, 28) or (B, 1, 28, 28) floats."""
    squeeze = imgs.ndim == 4
    arr = imgs[:, 0] if squeeze else imgs
    params = _draw_params(cfg, rng, len(arr))
    out = _warp_batch(arr, params)
    return out[:, None] if squeeze else out


# -- persistence ---------------------------------------------------------------


def save_dataset(ds: Dataset, path, manifest: dict | None = None):
    """APDS container: header then [label u8][784 pixel bytes] per record."""
    path = Path(path)
    count = len(ds)
    records = np.empty((count, 785), dtype=np.uint8)
    records[:, 0] = ds.labels
    records[:, 1:] = ds.images.reshape(count, 784)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, count, 28, 28))
        fh.write(records.tobytes())
    if manifest is None and ds.meta:
        manifest = ds.meta
    if manifest is not None:
        path.with_suffix(".json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def load_dataset(path) -> Dataset:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than header")
    magic, version, count, rows, cols = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    if rows != 28 or cols != 28:
        raise FormatError(f"{path}: unsupported image size {rows}x{cols}")
    expected = _HEADER.size + count * 785
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(blob)}")
    records = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size).reshape(count, 785)
    meta = {}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
    return Dataset(records[:, 1:].reshape(count, 28, 28).copy(), records[:, 0].copy(), meta=meta)
