"""Canonical single-stroke paths for the ten digits.

Each template is an ordered polyline in the unit square (y up) describing how
the digit is written in one approach-retract cycle, so digits that normally
take two strokes (4, 7 crossbars...) use connected one-stroke variants.
Asymmetric loop/stem shapes keep 6 and 9 distinguishable even under large
rotations of the rendered image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class DigitTemplate:
    digit: int
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not 0 <= self.digit <= 9:
            raise ValueError(f"digit must be 0-9, got {self.digit}")
        if len(self.points) < 4:
            raise ValueError("template needs at least 4 control points")


def _oval(cx, cy, rx, ry, start_deg, sweep_deg, n):
    pts = []
    for i in range(n + 1):
        a = math.radians(start_deg + sweep_deg * i / n)
        pts.append((cx + rx * math.cos(a), cy + ry * math.sin(a)))
    return pts


_ZERO = _oval(0.5, 0.5, 0.23, 0.40, 90, -360, 12)

_ONE = [(0.5, 0.92), (0.5, 0.63), (0.5, 0.34), (0.5, 0.06)]

_TWO = [
    (0.28, 0.76),
    (0.34, 0.88),
    (0.50, 0.93),
    (0.66, 0.87),
    (0.71, 0.73),
    (0.62, 0.56),
    (0.46, 0.40),
    (0.31, 0.24),
    (0.26, 0.10),
    (0.50, 0.10),
    (0.74, 0.10),
]

_THREE = [
    (0.30, 0.86),
    (0.46, 0.93),
    (0.63, 0.87),
    (0.68, 0.74),
    (0.59, 0.61),
    (0.44, 0.55),
    (0.61, 0.49),
    (0.70, 0.35),
    (0.63, 0.18),
    (0.46, 0.08),
    (0.29, 0.15),
]

_FOUR = [
    (0.30, 0.92),
    (0.27, 0.70),
    (0.24, 0.48),
    (0.50, 0.47),
    (0.76, 0.46),
    (0.70, 0.70),
    (0.66, 0.92),
    (0.66, 0.63),
    (0.65, 0.34),
    (0.65, 0.06),
]

_FIVE = [
    (0.72, 0.90),
    (0.52, 0.90),
    (0.33, 0.90),
    (0.33, 0.71),
    (0.34, 0.55),
    (0.50, 0.58),
    (0.64, 0.51),
    (0.70, 0.36),
    (0.63, 0.19),
    (0.46, 0.10),
    (0.30, 0.17),
]

_SIX = [
    (0.66, 0.94),
    (0.52, 0.81),
    (0.40, 0.65),
    (0.32, 0.47),
    (0.30, 0.31),
    (0.37, 0.15),
    (0.53, 0.10),
    (0.67, 0.17),
    (0.70, 0.33),
    (0.61, 0.45),
    (0.46, 0.46),
    (0.35, 0.37),
]

_SEVEN = [
    (0.25, 0.90),
    (0.48, 0.90),
    (0.72, 0.90),
    (0.61, 0.62),
    (0.51, 0.35),
    (0.43, 0.08),
]

_EIGHT = [
    (0.50, 0.92),
    (0.36, 0.85),
    (0.33, 0.72),
    (0.43, 0.59),
    (0.57, 0.49),
    (0.65, 0.34),
    (0.59, 0.17),
    (0.43, 0.13),
    (0.34, 0.26),
    (0.42, 0.42),
    (0.56, 0.53),
    (0.66, 0.67),
    (0.62, 0.83),
    (0.50, 0.92),
]

_NINE = [
    (0.67, 0.77),
    (0.58, 0.90),
    (0.42, 0.91),
    (0.32, 0.79),
    (0.33, 0.63),
    (0.45, 0.54),
    (0.60, 0.57),
    (0.67, 0.68),
    (0.67, 0.77),
    (0.67, 0.54),
    (0.67, 0.31),
    (0.67, 0.07),
]

TEMPLATES: dict[int, DigitTemplate] = {
    0: DigitTemplate(0, tuple(_ZERO)),
    1: DigitTemplate(1, tuple(_ONE)),
    2: DigitTemplate(2, tuple(_TWO)),
    3: DigitTemplate(3, tuple(_THREE)),
    4: DigitTemplate(4, tuple(_FOUR)),
    5: DigitTemplate(5, tuple(_FIVE)),
    6: DigitTemplate(6, tuple(_SIX)),
    7: DigitTemplate(7, tuple(_SEVEN)),
    8: DigitTemplate(8, tuple(_EIGHT)),
    9: DigitTemplate(9, tuple(_NINE)),
}
