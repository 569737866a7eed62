"""Renderer-independent scene graphs.

A SceneGraph is an immutable list of colored primitives in pixel
coordinates (origin top-left, y grows downward), ordered back to front
by their z value.  Techniques build scenes; the render module turns
them into vector or raster images.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ValidationError

Point = tuple[float, float]

_BOUNDS_EPS = 1e-6


@dataclass(frozen=True)
class Color:
    """RGB with float channels in [0, 1]."""

    r: float
    g: float
    b: float

    def __post_init__(self):
        for ch in (self.r, self.g, self.b):
            if not 0.0 <= ch <= 1.0:
                raise ValueError(f"channel {ch} outside [0, 1]")

    @property
    def rgb8(self) -> tuple[int, int, int]:
        return tuple(min(255, int(round(ch * 255.0))) for ch in (self.r, self.g, self.b))

    @property
    def hex(self) -> str:
        return "#{:02x}{:02x}{:02x}".format(*self.rgb8)


BLACK = Color(0.0, 0.0, 0.0)
WHITE = Color(1.0, 1.0, 1.0)
NEUTRAL_DARK = Color(0.15, 0.15, 0.15)


@dataclass(frozen=True)
class FilledPolygon:
    points: tuple[Point, ...]
    color: Color
    z: int
    tag: str = ""

    def vertices(self) -> tuple[Point, ...]:
        return self.points


@dataclass(frozen=True)
class Polyline:
    """Open stroked path; rendered 1 px wide, no joins beyond shared pixels."""

    points: tuple[Point, ...]
    color: Color
    z: int
    width: float = 1.0
    tag: str = ""

    def vertices(self) -> tuple[Point, ...]:
        return self.points


@dataclass(frozen=True)
class Triangle:
    """Filled three-vertex marker."""

    points: tuple[Point, Point, Point]
    color: Color
    z: int
    tag: str = ""

    def vertices(self) -> tuple[Point, ...]:
        return self.points


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle; filled, or a 1-unit outline when filled=False."""

    x: float
    y: float
    width: float
    height: float
    color: Color
    z: int
    filled: bool = True
    tag: str = ""

    def vertices(self) -> tuple[Point, ...]:
        return (
            (self.x, self.y),
            (self.x + self.width, self.y),
            (self.x + self.width, self.y + self.height),
            (self.x, self.y + self.height),
        )


@dataclass(frozen=True)
class Text:
    """Label anchored at (x, y); y is the text baseline."""

    x: float
    y: float
    content: str
    color: Color
    z: int
    size_px: float = 8.0
    anchor: str = "start"
    tag: str = ""

    def __post_init__(self):
        if self.anchor not in ("start", "middle", "end"):
            raise ValueError(f"unknown anchor {self.anchor!r}")

    def vertices(self) -> tuple[Point, ...]:
        return ((self.x, self.y),)


Primitive = FilledPolygon | Polyline | Triangle | Rect | Text


@dataclass(frozen=True)
class SceneGraph:
    """Fixed-size canvas plus primitives stably sorted by z (back to front)."""

    width_px: int
    height_px: int
    primitives: tuple[Primitive, ...] = ()
    background: Color = field(default_factory=lambda: WHITE)

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValidationError("scene size must be positive")
        ordered = tuple(sorted(self.primitives, key=lambda p: p.z))
        object.__setattr__(self, "primitives", ordered)
        for p in ordered:
            for x, y in p.vertices():
                if not (
                    -_BOUNDS_EPS <= x <= self.width_px + _BOUNDS_EPS
                    and -_BOUNDS_EPS <= y <= self.height_px + _BOUNDS_EPS
                ):
                    raise ValidationError(
                        f"vertex ({x}, {y}) outside canvas "
                        f"{self.width_px}x{self.height_px} ({type(p).__name__} tag={p.tag!r})"
                    )


def translate(prim: Primitive, dx: float, dy: float) -> Primitive:
    """Copy of a primitive shifted by (dx, dy)."""
    if isinstance(prim, (FilledPolygon, Polyline, Triangle)):
        moved = tuple((x + dx, y + dy) for x, y in prim.points)
        return replace(prim, points=moved)
    if isinstance(prim, (Rect, Text)):
        return replace(prim, x=prim.x + dx, y=prim.y + dy)
    raise TypeError(f"unknown primitive {type(prim).__name__}")


def with_z(prim: Primitive, z: int) -> Primitive:
    return replace(prim, z=z)
