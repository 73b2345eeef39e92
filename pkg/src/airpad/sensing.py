"""Behavioral model of the sensing board.

Hand positions go in; calibrated, filtered, quantized four-channel frames
come out at the scan rate. The oscillator/comparator chain is collapsed into
a single normalized proximity response per electrode, low-passed at an
internal rate well above the scan rate and decimated by per-channel
sample-and-hold slots.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    InsufficientIdleFrames,
    OutOfOrderTimestamp,
    TrajectoryGap,
)

Point3 = tuple[float, float, float]

_MIRROR_TOL = 1e-9
# Time slack when deciding whether buffered samples cover a scan cycle,
# absorbing float error in tick-time arithmetic (1 ns << sample spacing).
_COVER_EPS = 1e-9


@dataclass(frozen=True)
class ElectrodeLayout:
    """Positions of the four receiving pads in cm; transmit pad at origin."""

    pad_a: Point3 = (3.0, 0.0, 0.0)
    pad_b: Point3 = (0.0, 3.0, 0.0)
    pad_c: Point3 = (0.0, -3.0, 0.0)
    pad_d: Point3 = (-3.0, 0.0, 0.0)
    pad_radius_cm: float = 1.0

    def __post_init__(self):
        for name, pad in self.named_pads():
            if abs(pad[2]) > _MIRROR_TOL:
                raise ConfigError(f"pad {name} must lie in the z=0 plane, got z={pad[2]}")
        ax, ay, _ = self.pad_a
        dx, dy, _ = self.pad_d
        if abs(ax + dx) > _MIRROR_TOL or abs(ay - dy) > _MIRROR_TOL:
            raise ConfigError("pads A and D must be mirror images through the x=0 plane")
        bx, by, _ = self.pad_b
        cx, cy, _ = self.pad_c
        if abs(by + cy) > _MIRROR_TOL or abs(bx - cx) > _MIRROR_TOL:
            raise ConfigError("pads B and C must be mirror images through the y=0 plane")

    def named_pads(self):
        return (("a", self.pad_a), ("b", self.pad_b), ("c", self.pad_c), ("d", self.pad_d))

    def pad_array(self) -> np.ndarray:
        """(4, 3) pad centers in channel order a, b, c, d."""
        return np.array([self.pad_a, self.pad_b, self.pad_c, self.pad_d], dtype=float)


@dataclass(frozen=True)
class HandSample:
    """Timestamped 3D hand position in cm."""

    x_cm: float
    y_cm: float
    z_cm: float
    t_s: float

    def __post_init__(self):
        if self.z_cm < 0:
            raise ValueError(f"hand z must be >= 0, got {self.z_cm}")


@dataclass(frozen=True)
class SensorConfig:
    lambda_cm: float = 4.0
    noise_sigma: float = 0.003
    scan_rate_hz: int = 80
    internal_rate_hz: int = 2000
    filter_cutoff_hz: float = 72.3
    adc_bits: int = 10
    seed: int = 0
    calibration_frames: int = 40

    def __post_init__(self):
        if self.lambda_cm <= 0:
            raise ConfigError("lambda_cm must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.scan_rate_hz <= 0 or self.internal_rate_hz <= 0:
            raise ConfigError("rates must be positive")
        if self.internal_rate_hz % self.scan_rate_hz != 0:
            raise ConfigError("internal_rate_hz must be an integer multiple of scan_rate_hz")
        if self.internal_rate_hz < 4 * self.scan_rate_hz:
            raise ConfigError("need at least 4 internal ticks per scan cycle")
        if not self.filter_cutoff_hz < self.internal_rate_hz / 2:
            raise ConfigError("filter_cutoff_hz must be below the internal Nyquist rate")
        if not 1 <= self.adc_bits <= 16:
            raise ConfigError("adc_bits must be in [1, 16]")
        if self.calibration_frames < 1:
            raise ConfigError("calibration_frames must be >= 1")

    @property
    def ticks_per_frame(self) -> int:
        return self.internal_rate_hz // self.scan_rate_hz


@dataclass(frozen=True)
class ChannelFrame:
    """One scan of the four receiving electrodes, normalized voltages in [0, 1]."""

    a: float
    b: float
    c: float
    d: float
    t_s: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class CalibrationState:
    """Per-channel idle baseline, subtracted from every subsequent frame."""

    baseline: tuple[float, float, float, float]
    frames_accumulated: int


def channel_response(
    hand: HandSample, layout: ElectrodeLayout, cfg: SensorConfig
) -> tuple[float, float, float, float]:
    """Raw noise-free proximity response of each electrode, in (0, 1].

    exp(-r/lambda) of the hand-to-pad distance; closer hand, stronger signal.
    """
    p = np.array([hand.x_cm, hand.y_cm, hand.z_cm], dtype=float)
    r = np.sqrt(((layout.pad_array() - p) ** 2).sum(axis=1))
    s = np.exp(-r / cfg.lambda_cm)
    return (float(s[0]), float(s[1]), float(s[2]), float(s[3]))


def lowpass_alpha(cfg: SensorConfig) -> float:
    """Smoothing coefficient of the one-pole filter at the internal rate."""
    return 1.0 - math.exp(-2.0 * math.pi * cfg.filter_cutoff_hz / cfg.internal_rate_hz)


class OnePoleLowpass:
    """First-order IIR emulating the RC filter; DC gain exactly 1.

    y <- y + alpha * (u - y). State initializes to the first input.
    """

    def __init__(self, alpha: float):
        if not 0 < alpha <= 1:
            raise ConfigError(f"alpha must be in (0, 1], got {alpha}")
        self.alpha = alpha
        self.y: float | None = None

    def step(self, u: float) -> float:
        if self.y is None:
            self.y = float(u)
        else:
            self.y += self.alpha * (u - self.y)
        return self.y

    def reset(self):
        self.y = None


def lowpass_step(state: OnePoleLowpass, u: float) -> float:
    return state.step(u)


def calibrate(frames: list[ChannelFrame], cfg: SensorConfig) -> CalibrationState:
    """Per-channel mean of idle frames; emulates the hardware reference trim."""
    if len(frames) < cfg.calibration_frames:
        raise InsufficientIdleFrames(
            f"need >= {cfg.calibration_frames} idle frames, got {len(frames)}"
        )
    arr = np.array([f.as_tuple() for f in frames], dtype=float)
    mean = arr.mean(axis=0)
    return CalibrationState(baseline=tuple(float(v) for v in mean), frames_accumulated=len(frames))


class SensorSimulator:
    """Streams scan cycles from an interpolated hand trajectory.

    Single-owner mutable state: one instance per logical session. The time
    axis is anchored at the first fed sample; one frame is emitted per
    1/scan_rate interval once buffered samples cover it. Runs are
    deterministic for a fixed config (including seed).
    """

    def __init__(self, cfg: SensorConfig | None = None, layout: ElectrodeLayout | None = None):
        self.cfg = cfg or SensorConfig()
        self.layout = layout or ElectrodeLayout()
        self.calibration: CalibrationState | None = None
        self._alpha = lowpass_alpha(self.cfg)
        self._pads = self.layout.pad_array()
        tpf = self.cfg.ticks_per_frame
        # Sample-and-hold slots: channels latched in order a, b, c, d at
        # evenly spaced tick offsets within the cycle.
        self._slots = [ch * tpf // 4 for ch in range(4)]
        self._levels = (1 << self.cfg.adc_bits) - 1
        self.reset()

    def reset(self):
        """Clear clock, filters, buffers and RNG; calibration is kept."""
        self._rng = np.random.default_rng(self.cfg.seed)
        self._y = [None, None, None, None]
        self._t0: float | None = None
        self._cycle = 0
        self._buf_t: list[float] = []
        self._buf_x: list[float] = []
        self._buf_y: list[float] = []
        self._buf_z: list[float] = []

    def reanchor(self):
        """Restart the time axis at the next fed sample.

        Filter state, RNG stream and calibration carry over, so a live
        session can switch from the calibration timeline to client-clock
        timestamps without replaying the noise sequence.
        """
        self._t0 = None
        self._cycle = 0
        self._buf_t = []
        self._buf_x = []
        self._buf_y = []
        self._buf_z = []

    @property
    def frames_emitted(self) -> int:
        return self._cycle

    def feed(self, sample: HandSample) -> list[ChannelFrame]:
        """Buffer one sample and emit every scan cycle it completes."""
        if self._buf_t and sample.t_s <= self._buf_t[-1]:
            raise OutOfOrderTimestamp(
                f"sample at t={sample.t_s} not after previous t={self._buf_t[-1]}"
            )
        if self._t0 is None:
            self._t0 = sample.t_s
        self._buf_t.append(sample.t_s)
        self._buf_x.append(sample.x_cm)
        self._buf_y.append(sample.y_cm)
        self._buf_z.append(sample.z_cm)

        frames = []
        while self._cycle_covered():
            frames.append(self._emit_cycle())
        return frames

    def run(self, samples, duration_s: float | None = None) -> list[ChannelFrame]:
        """Feed a whole trajectory; optionally require coverage of duration_s."""
        frames: list[ChannelFrame] = []
        for s in samples:
            frames.extend(self.feed(s))
        if duration_s is not None:
            expected = math.floor(duration_s * self.cfg.scan_rate_hz)
            if self._cycle < expected:
                raise TrajectoryGap(
                    f"trajectory covers only {self._cycle} of {expected} scan cycles"
                )
        return frames

    # -- internals -----------------------------------------------------------

    def _cycle_end(self, k: int) -> float:
        tpf = self.cfg.ticks_per_frame
        return self._t0 + (k + 1) * tpf / self.cfg.internal_rate_hz

    def _cycle_covered(self) -> bool:
        if self._t0 is None or not self._buf_t:
            return False
        return self._buf_t[-1] >= self._cycle_end(self._cycle) - _COVER_EPS

    def _emit_cycle(self) -> ChannelFrame:
        cfg = self.cfg
        tpf = cfg.ticks_per_frame
        k = self._cycle
        dt = 1.0 / cfg.internal_rate_hz
        ticks = self._t0 + (k * tpf + np.arange(1, tpf + 1)) * dt

        bt = np.asarray(self._buf_t)
        px = np.interp(ticks, bt, np.asarray(self._buf_x))
        py = np.interp(ticks, bt, np.asarray(self._buf_y))
        pz = np.interp(ticks, bt, np.asarray(self._buf_z))
        dx = px[:, None] - self._pads[None, :, 0]
        dy = py[:, None] - self._pads[None, :, 1]
        dz = pz[:, None] - self._pads[None, :, 2]
        u = np.exp(-np.sqrt(dx * dx + dy * dy + dz * dz) / cfg.lambda_cm)
        if cfg.noise_sigma > 0:
            u = u + self._rng.normal(0.0, cfg.noise_sigma, size=(tpf, 4))
        rows = u.tolist()

        ya, yb, yc, yd = self._y
        if ya is None:
            ya, yb, yc, yd = rows[0]
        alpha = self._alpha
        sa, sb, sc, sd = self._slots
        held = [0.0, 0.0, 0.0, 0.0]
        for j, (ua, ub, uc, ud) in enumerate(rows):
            ya += alpha * (ua - ya)
            yb += alpha * (ub - yb)
            yc += alpha * (uc - yc)
            yd += alpha * (ud - yd)
            if j == sa:
                held[0] = ya
            if j == sb:
                held[1] = yb
            if j == sc:
                held[2] = yc
            if j == sd:
                held[3] = yd
        self._y = [ya, yb, yc, yd]

        levels = self._levels
        q = [round(min(max(v, 0.0), 1.0) * levels) / levels for v in held]
        if self.calibration is not None:
            base = self.calibration.baseline
            q = [min(max(q[i] - base[i], 0.0), 1.0) for i in range(4)]

        self._cycle += 1
        self._prune_buffer()
        return ChannelFrame(a=q[0], b=q[1], c=q[2], d=q[3], t_s=self._cycle_end(k))

    def _prune_buffer(self):
        # Keep one sample at or before the next cycle's first tick.
        tpf = self.cfg.ticks_per_frame
        start = self._t0 + (self._cycle * tpf + 1) / self.cfg.internal_rate_hz
        while len(self._buf_t) >= 2 and self._buf_t[1] <= start:
            self._buf_t.pop(0)
            self._buf_x.pop(0)
            self._buf_y.pop(0)
            self._buf_z.pop(0)


def idle_samples(
    duration_s: float, t0: float = 0.0, z_cm: float = 40.0, rate_hz: float = 100.0
) -> list[HandSample]:
    """Parked-hand trajectory used to settle filters and collect idle frames."""
    n = int(round(duration_s * rate_hz))
    return [HandSample(0.0, 0.0, z_cm, t0 + i / rate_hz) for i in range(n + 1)]


def calibration_run(sim: SensorSimulator, t0: float = 0.0, settle_s: float = 0.2) -> float:
    """Run the idle phase on a fresh simulator and install the baseline.

    Returns the timestamp where the idle phase ended; subsequent samples fed
    to the simulator must start after it.
    """
    cfg = sim.cfg
    idle_s = settle_s + cfg.calibration_frames / cfg.scan_rate_hz
    frames = sim.run(idle_samples(idle_s + 0.05, t0=t0))
    settle = int(round(settle_s * cfg.scan_rate_hz))
    sim.calibration = calibrate(frames[settle:], cfg)
    return t0 + idle_s + 0.05


def load_trajectory(path) -> list[HandSample]:
    """Trajectory replay file: JSON array of {"t", "x", "y", "z"}."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return [HandSample(float(r["x"]), float(r["y"]), float(r["z"]), float(r["t"])) for r in raw]


def save_trajectory(samples: list[HandSample], path):
    rows = [{"t": s.t_s, "x": s.x_cm, "y": s.y_cm, "z": s.z_cm} for s in samples]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh)


def write_frames_csv(frames: list[ChannelFrame], path):
    """Frame dump: CSV with header t,a,b,c,d at 6 decimal places."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,a,b,c,d\n")
        for f in frames:
            fh.write(f"{f.t_s:.6f},{f.a:.6f},{f.b:.6f},{f.c:.6f},{f.d:.6f}\n")
