"""Colored point configurations on the unit square.

A configuration is an ordered, finite set of colored points in
S = [0,1]^2.  The order is the sampling order and is preserved by every
perturbation, which is what makes point-wise couplings (shared indices,
symmetric differences) well defined.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np

__all__ = [
    "Color",
    "Point",
    "Rect",
    "Configuration",
    "sample_configuration",
    "color_of",
]


class Color(IntEnum):
    RED = 0
    BLUE = 1


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [a,b] x [c,d] inside the unit square."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= 1.0 and 0.0 <= self.c < self.d <= 1.0):
            raise ValueError(f"invalid rectangle [{self.a},{self.b}]x[{self.c},{self.d}]")

    @classmethod
    def unit(cls) -> "Rect":
        return cls(0.0, 1.0, 0.0, 1.0)

    @classmethod
    def parse(cls, text: str) -> "Rect":
        """Parse 'a,b,c,d'."""
        parts = [float(t) for t in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected 4 comma-separated numbers, got {text!r}")
        return cls(*parts)

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def height(self) -> float:
        return self.d - self.c

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)


_FRAME_MAGIC = b"VPCF"
_FRAME_VERSION = 1


@dataclass(frozen=True)
class Configuration:
    """Ordered colored points in S with the sampling metadata.

    ``xy`` has shape (N, 2); ``colors`` has shape (N,) with values from
    :class:`Color`.  Arrays are frozen after construction.
    """

    xy: np.ndarray
    colors: np.ndarray
    intensity_used: float
    blue_prob_used: float
    jittered: bool = field(default=False, compare=False)

    def __post_init__(self):
        xy = np.ascontiguousarray(self.xy, dtype=np.float64).reshape(-1, 2)
        colors = np.ascontiguousarray(self.colors, dtype=np.uint8).reshape(-1)
        if xy.shape[0] != colors.shape[0]:
            raise ValueError("xy and colors length mismatch")
        if xy.size and (xy.min() < 0.0 or xy.max() > 1.0):
            raise ValueError("points must lie in the unit square")
        if colors.size and colors.max() > 1:
            raise ValueError("colors must be 0 (red) or 1 (blue)")
        xy.setflags(write=False)
        colors.setflags(write=False)
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "colors", colors)

    def __len__(self) -> int:
        return self.xy.shape[0]

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    @property
    def blue_mask(self) -> np.ndarray:
        return self.colors == Color.BLUE

    @property
    def red_mask(self) -> np.ndarray:
        return self.colors == Color.RED

    def replace(self, xy=None, colors=None, **meta) -> "Configuration":
        return Configuration(
            xy=self.xy if xy is None else xy,
            colors=self.colors if colors is None else colors,
            intensity_used=meta.get("intensity_used", self.intensity_used),
            blue_prob_used=meta.get("blue_prob_used", self.blue_prob_used),
            jittered=meta.get("jittered", self.jittered),
        )

    # -- serialization ---------------------------------------------------

    def to_csv(self, path_or_buf) -> None:
        """Write columns x,y,color (color 0=red, 1=blue)."""
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            f = open(path_or_buf, "w")
            close = True
        else:
            f = path_or_buf
        try:
            f.write("x,y,color\n")
            for (x, y), c in zip(self.xy, self.colors):
                f.write(f"{float(x)!r},{float(y)!r},{int(c)}\n")
        finally:
            if close:
                f.close()

    @classmethod
    def from_csv(cls, path_or_buf, intensity_used: float = float("nan"),
                 blue_prob_used: float = float("nan")) -> "Configuration":
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            f = open(path_or_buf)
            close = True
        else:
            f = path_or_buf
        try:
            header = f.readline().strip()
            if header != "x,y,color":
                raise ValueError(f"unexpected configuration CSV header {header!r}")
            xs, ys, cs = [], [], []
            for line in f:
                line = line.strip()
                if not line:
                    continue
                x, y, c = line.split(",")
                xs.append(float(x))
                ys.append(float(y))
                cs.append(int(c))
        finally:
            if close:
                f.close()
        xy = np.column_stack([xs, ys]) if xs else np.empty((0, 2))
        return cls(xy=xy, colors=np.asarray(cs, dtype=np.uint8),
                   intensity_used=intensity_used, blue_prob_used=blue_prob_used)

    def to_frame(self) -> bytes:
        """Versioned little-endian binary frame."""
        n = len(self)
        head = _FRAME_MAGIC + struct.pack("<HQdd", _FRAME_VERSION, n,
                                          self.intensity_used, self.blue_prob_used)
        body = (self.xy[:, 0].astype("<f8").tobytes()
                + self.xy[:, 1].astype("<f8").tobytes()
                + self.colors.astype("u1").tobytes())
        return head + body

    @classmethod
    def from_frame(cls, payload: bytes) -> "Configuration":
        if payload[:4] != _FRAME_MAGIC:
            raise ValueError("not a configuration frame")
        version, n, intensity, p = struct.unpack_from("<HQdd", payload, 4)
        if version != _FRAME_VERSION:
            raise ValueError(f"unsupported frame version {version}")
        off = 4 + struct.calcsize("<HQdd")
        x = np.frombuffer(payload, dtype="<f8", count=n, offset=off)
        y = np.frombuffer(payload, dtype="<f8", count=n, offset=off + 8 * n)
        colors = np.frombuffer(payload, dtype="u1", count=n, offset=off + 16 * n)
        return cls(xy=np.column_stack([x, y]) if n else np.empty((0, 2)),
                   colors=colors.copy(), intensity_used=intensity, blue_prob_used=p)


def sample_configuration(n: float, p: float, rng: np.random.Generator) -> Configuration:
    """Sample a Poisson(n) number of uniform points, colored blue w.p. p.

    The sampling order (count, then positions, then colors) is fixed so a
    seeded generator reproduces the configuration bit for bit.
    """
    if n < 0:
        raise ValueError("intensity must be nonnegative")
    if not 0.0 <= p <= 1.0:
        raise ValueError("blue probability must lie in [0,1]")
    count = int(rng.poisson(n)) if n > 0 else 0
    xy = rng.random((count, 2))
    colors = (rng.random(count) < p).astype(np.uint8)
    return Configuration(xy=xy, colors=colors, intensity_used=float(n),
                         blue_prob_used=float(p))


def color_of(q, config: Configuration) -> Color:
    """Color of the nearest site's cell; all of S is red when empty.

    Exact-distance ties resolve to the lowest site index.
    """
    if config.is_empty:
        return Color.RED
    from .kernels import nearest_sites

    q = np.asarray(q, dtype=np.float64).reshape(1, 2)
    idx = int(nearest_sites(config.xy, q)[0])
    return Color(int(config.colors[idx]))
