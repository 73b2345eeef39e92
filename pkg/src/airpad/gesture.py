"""Channel frames to coordinates, gesture segmentation, and rasterization.

Coordinates come straight from the channel differences; segmentation uses a
proximity threshold with hysteresis so noise near the boundary distance does
not chatter; completed traces are normalized and drawn into 28x28 images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyTrace, NonPositiveProximity, OutOfOrderTimestamp
from .sensing import ChannelFrame

# Proximity of a hand 4 cm above the pad center under the default layout:
# exp(-5/4), since that point is 5 cm from each pad center.
DEFAULT_Z_ON = math.exp(-1.25)
DEFAULT_MIN_POINTS = 8

SUPER_SIZE = 140
IMAGE_SIZE = 28
STROKE_RADIUS = 7.0  # px on the supersampled grid
# Normalized traces fit a centered 20/28 box, MNIST-style framing.
TARGET_FRACTION = 20 / 28


@dataclass(frozen=True)
class Coordinate:
    """Reconstructed GUI-space position: x, y in [-1, 1], proximity z in [0, 1]."""

    x_u: float
    y_u: float
    z_u: float
    t_s: float


@dataclass(frozen=True)
class GestureTrace:
    points: tuple[Coordinate, ...]
    start_t: float
    end_t: float

    def xy(self) -> np.ndarray:
        return np.array([(p.x_u, p.y_u) for p in self.points], dtype=float)


def reconstruct(frame: ChannelFrame) -> Coordinate:
    """x = a - d, y = b - c, z = mean of all four channels."""
    return Coordinate(
        x_u=frame.a - frame.d,
        y_u=frame.b - frame.c,
        z_u=(frame.a + frame.b + frame.c + frame.d) / 4.0,
        t_s=frame.t_s,
    )


def estimate_distance(z_u: float, lambda_cm: float = 4.0) -> float:
    """Mean slant range implied by a proximity value; display aid only."""
    if z_u <= 0:
        raise NonPositiveProximity(f"proximity must be positive, got {z_u}")
    return max(0.0, -lambda_cm * math.log(z_u))


class SegmentEventKind(Enum):
    IDLE = "idle"
    STARTED = "started"
    POINT = "point"
    COMPLETED = "completed"
    DISCARDED = "discarded"


@dataclass(frozen=True)
class SegmentEvent:
    kind: SegmentEventKind
    coord: Coordinate
    trace: GestureTrace | None = None


@dataclass
class Segmenter:
    """Splits the coordinate stream into gestures at the proximity threshold.

    Hysteresis: arms at z_on, releases at z_off < z_on. Tracks with fewer
    than min_points are discarded as accidental dips.
    """

    z_on: float = DEFAULT_Z_ON
    z_off: float | None = None
    min_points: int = DEFAULT_MIN_POINTS
    _active: bool = field(default=False, init=False)
    _trace: list[Coordinate] = field(default_factory=list, init=False)
    _last_t: float | None = field(default=None, init=False)

    def __post_init__(self):
        if self.z_off is None:
            self.z_off = 0.9 * self.z_on
        if not 0 < self.z_off < self.z_on:
            raise ValueError("need z_on > z_off > 0")
        if self.min_points < 1:
            raise ValueError("min_points must be >= 1")

    @property
    def active(self) -> bool:
        return self._active

    def reset(self):
        self._active = False
        self._trace = []
        self._last_t = None

    def step(self, coord: Coordinate) -> SegmentEvent:
        if self._last_t is not None and coord.t_s <= self._last_t:
            raise OutOfOrderTimestamp(
                f"coordinate at t={coord.t_s} not after previous t={self._last_t}"
            )
        self._last_t = coord.t_s

        if not self._active:
            if coord.z_u >= self.z_on:
                self._active = True
                self._trace = [coord]
                return SegmentEvent(SegmentEventKind.STARTED, coord)
            return SegmentEvent(SegmentEventKind.IDLE, coord)

        if coord.z_u < self.z_off:
            trace = self._trace
            self._active = False
            self._trace = []
            if len(trace) >= self.min_points:
                gt = GestureTrace(
                    points=tuple(trace), start_t=trace[0].t_s, end_t=trace[-1].t_s
                )
                return SegmentEvent(SegmentEventKind.COMPLETED, coord, trace=gt)
            return SegmentEvent(SegmentEventKind.DISCARDED, coord)

        self._trace.append(coord)
        return SegmentEvent(SegmentEventKind.POINT, coord)


def normalize_trace(trace: GestureTrace | np.ndarray) -> np.ndarray:
    """Translate and uniformly scale a trace into the centered target box.

    Returns (T, 2) points in the unit square, y still pointing up. The
    bounding box of the result fits the centered 20/28 fraction; degenerate
    traces collapse to the center.
    """
    pts = trace.xy() if isinstance(trace, GestureTrace) else np.asarray(trace, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise EmptyTrace("normalize_trace needs at least one (x, y) point")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    center = (lo + hi) / 2.0
    if span <= 0:
        return np.full_like(pts, 0.5)
    scale = TARGET_FRACTION / span
    return 0.5 + (pts - center) * scale


def rasterize(polyline: np.ndarray, label: int | None = None) -> "DigitImage":
    """Draw a unit-square polyline into a 28x28 grayscale image.

    Strokes are rendered at 140x140 with round caps and radius-7 coverage,
    then box-averaged 5x down. Row 0 is the top of the image (y flipped once
    here).
    """
    pts = np.asarray(polyline, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise EmptyTrace("rasterize needs at least one (x, y) point")

    # Unit square -> supersampled pixel space, y axis flipped to rows.
    px = pts[:, 0] * SUPER_SIZE
    py = (1.0 - pts[:, 1]) * SUPER_SIZE
    canvas = np.zeros((SUPER_SIZE, SUPER_SIZE), dtype=float)
    r = STROKE_RADIUS

    seg_starts = np.stack([px[:-1], py[:-1]], axis=1) if len(pts) > 1 else np.empty((0, 2))
    seg_ends = np.stack([px[1:], py[1:]], axis=1) if len(pts) > 1 else np.empty((0, 2))
    if len(pts) == 1:
        seg_starts = np.array([[px[0], py[0]]])
        seg_ends = seg_starts.copy()

    for (x0, y0), (x1, y1) in zip(seg_starts, seg_ends):
        lo_c = max(int(math.floor(min(x0, x1) - r)) - 1, 0)
        hi_c = min(int(math.ceil(max(x0, x1) + r)) + 1, SUPER_SIZE)
        lo_r = max(int(math.floor(min(y0, y1) - r)) - 1, 0)
        hi_r = min(int(math.ceil(max(y0, y1) + r)) + 1, SUPER_SIZE)
        if lo_c >= hi_c or lo_r >= hi_r:
            continue
        cols = np.arange(lo_c, hi_c) + 0.5
        rows = np.arange(lo_r, hi_r) + 0.5
        gx = cols[None, :] - x0
        gy = rows[:, None] - y0
        ex, ey = x1 - x0, y1 - y0
        seg_len2 = ex * ex + ey * ey
        if seg_len2 > 0:
            t = np.clip((gx * ex + gy * ey) / seg_len2, 0.0, 1.0)
            dx = gx - t * ex
            dy = gy - t * ey
        else:
            dx, dy = gx, gy
        mask = dx * dx + dy * dy <= r * r
        region = canvas[lo_r:hi_r, lo_c:hi_c]
        np.maximum(region, mask.astype(float), out=region)

    factor = SUPER_SIZE // IMAGE_SIZE
    pixels = canvas.reshape(IMAGE_SIZE, factor, IMAGE_SIZE, factor).mean(axis=(1, 3))
    return DigitImage(pixels=pixels, label=label)


@dataclass(frozen=True)
class DigitImage:
    """28x28 grayscale raster, values in [0, 1], optional digit label."""

    pixels: np.ndarray
    label: int | None = None

    def __post_init__(self):
        if self.pixels.shape != (IMAGE_SIZE, IMAGE_SIZE):
            raise ValueError(f"expected {IMAGE_SIZE}x{IMAGE_SIZE} pixels, got {self.pixels.shape}")
        if self.label is not None and not 0 <= self.label <= 9:
            raise ValueError(f"label must be 0-9, got {self.label}")

    def to_bytes(self) -> bytes:
        """Row-major u8 record, value = round(pixel * 255)."""
        return np.rint(self.pixels * 255).astype(np.uint8).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, label: int | None = None) -> "DigitImage":
        if len(data) != IMAGE_SIZE * IMAGE_SIZE:
            raise ValueError(f"expected {IMAGE_SIZE * IMAGE_SIZE} bytes, got {len(data)}")
        arr = np.frombuffer(data, dtype=np.uint8).reshape(IMAGE_SIZE, IMAGE_SIZE)
        return cls(pixels=arr.astype(float) / 255.0, label=label)
