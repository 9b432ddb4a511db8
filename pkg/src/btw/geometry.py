"""Coordinate spaces and the pure transforms between them.

Four spaces are involved in mirroring a page into panels:

* document space — CSS pixels, origin at the document's top-left; regions
  live here.
* viewport space — CSS pixels relative to the current scroll position.
* frame space — integer device pixels inside one captured bitmap
  (viewport scaled by the device scale).
* panel-local space — normalized (u, v) in [0, 1] within one panel.

Everything here is pure and stateless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError

__all__ = [
    "PagePoint",
    "RegionRect",
    "ViewportMetrics",
    "ViewportPoint",
    "UnitPoint",
    "FrameRect",
    "panel_local_to_doc",
    "doc_to_viewport",
    "crop_rect_in_frame",
    "round_half_away",
]


@dataclass(frozen=True)
class PagePoint:
    """A point in document space (CSS px, origin at document top-left)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidInputError(f"non-finite page point ({self.x}, {self.y})")


@dataclass(frozen=True)
class RegionRect:
    """An axis-aligned rectangle in document space (CSS px).

    Width and height must be strictly positive; degenerate regions are a
    validation error, never silently clamped.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for v in (self.x, self.y, self.w, self.h):
            if not math.isfinite(v):
                raise InvalidInputError(f"non-finite region rect {self!r}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidInputError(f"region must have positive area, got {self.w}x{self.h}")


@dataclass(frozen=True)
class ViewportMetrics:
    """Scroll offset, viewport and document size, and device scale.

    Scroll offsets are expected pre-clamped to ``0 <= scroll <= document -
    viewport`` (the bridge enforces this on every scroll).
    """

    scroll_x: float
    scroll_y: float
    viewport_w: float
    viewport_h: float
    device_scale: float
    document_w: float
    document_h: float

    def __post_init__(self) -> None:
        if self.device_scale <= 0:
            raise InvalidInputError(f"device_scale must be > 0, got {self.device_scale}")
        if self.viewport_w <= 0 or self.viewport_h <= 0:
            raise InvalidInputError("viewport dimensions must be positive")
        if self.document_w < self.viewport_w or self.document_h < self.viewport_h:
            raise InvalidInputError("document smaller than viewport")
        max_sx = self.document_w - self.viewport_w
        max_sy = self.document_h - self.viewport_h
        if not (0 <= self.scroll_x <= max_sx) or not (0 <= self.scroll_y <= max_sy):
            raise InvalidInputError(
                f"scroll ({self.scroll_x}, {self.scroll_y}) outside [0, {max_sx}]x[0, {max_sy}]"
            )

    def clamp_scroll(self, sx: float, sy: float) -> tuple[float, float]:
        """Clamp a requested scroll offset to the document bounds."""
        return (
            min(max(sx, 0.0), self.document_w - self.viewport_w),
            min(max(sy, 0.0), self.document_h - self.viewport_h),
        )

    @property
    def frame_w(self) -> int:
        """Captured frame width in device pixels."""
        return round(self.viewport_w * self.device_scale)

    @property
    def frame_h(self) -> int:
        """Captured frame height in device pixels."""
        return round(self.viewport_h * self.device_scale)


@dataclass(frozen=True)
class ViewportPoint:
    """A point in viewport space (CSS px, origin at viewport top-left)."""

    x: float
    y: float


@dataclass(frozen=True)
class UnitPoint:
    """Panel-local normalized coordinates; (0, 0) is the panel's top-left."""

    u: float
    v: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.u <= 1.0 and 0.0 <= self.v <= 1.0):
            raise InvalidInputError(f"unit point ({self.u}, {self.v}) outside [0,1]^2")


@dataclass(frozen=True)
class FrameRect:
    """Integer device-pixel rectangle inside a captured frame."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.x < 0 or self.y < 0 or self.w <= 0 or self.h <= 0:
            raise InvalidInputError(f"frame rect must be non-negative with positive area: {self!r}")


def panel_local_to_doc(p: UnitPoint, r: RegionRect) -> PagePoint:
    """Map a panel-local point onto the panel's document-space region."""
    return PagePoint(r.x + p.u * r.w, r.y + p.v * r.h)


def doc_to_viewport(p: PagePoint, m: ViewportMetrics) -> tuple[ViewportPoint, bool]:
    """Translate a document point into viewport space.

    Returns the translated point plus a visibility flag; the flag is true
    iff the point lies within the viewport bounds (edges inclusive).
    Clipping is never an error here.
    """
    vp = ViewportPoint(p.x - m.scroll_x, p.y - m.scroll_y)
    visible = 0 <= vp.x <= m.viewport_w and 0 <= vp.y <= m.viewport_h
    return vp, visible


def crop_rect_in_frame(r: RegionRect, m: ViewportMetrics) -> FrameRect | None:
    """Locate a document-space region inside the captured frame.

    Translates by the scroll offset, scales to device pixels, rounds
    outward (origin down, extent up) so no region pixel is lost, and
    intersects with the frame bounds. Returns None when the intersection
    has zero area (region scrolled out of the viewport).
    """
    s = m.device_scale
    left = (r.x - m.scroll_x) * s
    top = (r.y - m.scroll_y) * s
    right = left + r.w * s
    bottom = top + r.h * s

    x0 = max(math.floor(left), 0)
    y0 = max(math.floor(top), 0)
    x1 = min(math.ceil(right), m.frame_w)
    y1 = min(math.ceil(bottom), m.frame_h)

    if x1 <= x0 or y1 <= y0:
        return None
    return FrameRect(x0, y0, x1 - x0, y1 - y0)


def round_half_away(value: float) -> int:
    """Round to the nearest integer, halves away from zero.

    Injection coordinates use this instead of builtin round() so that .5
    never rounds toward even.
    """
    if value >= 0:
        return math.floor(value + 0.5)
    return math.ceil(value - 0.5)
