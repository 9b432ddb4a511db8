"""Port abstraction over a live browser.

Two implementations exist: a deterministic in-process mock
(:mod:`btw.bridge.mock`) that every automated test runs against, and an
adapter speaking a real browser's remote-debugging protocol
(:mod:`btw.bridge.devtools`).

Bitmaps are numpy arrays of shape ``(h, w, 4)``, dtype uint8, RGBA.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Protocol

import numpy as np

from ..geometry import RegionRect, ViewportMetrics, ViewportPoint

Bitmap = np.ndarray

POINTER_KINDS = ("pointer-down", "pointer-move", "pointer-up")


@dataclass
class PageHandle:
    """Opaque handle for one browser page session."""

    session_id: str
    url: str


@dataclass(frozen=True)
class SourceFrame:
    """One captured frame: pixels plus the metrics they were taken under.

    ``seq`` increases strictly per handle; ``metrics`` is captured
    atomically with the bitmap so crops computed from it are exact.
    """

    seq: int
    bitmap: Bitmap
    metrics: ViewportMetrics
    timestamp_ms: float


@dataclass(frozen=True)
class InjectedEvent:
    """Record of one injected event (mock bridge only, for tests)."""

    kind: str
    x: float | None
    y: float | None
    payload: dict
    index: int


class CaptureStream(Protocol):
    """Pull-based stream of source frames.

    ``next_frame`` blocks (real adapter) or synthesizes (mock) the next
    frame; frames arrive in strictly increasing seq order.
    """

    max_fps: int

    def next_frame(self) -> SourceFrame: ...

    def stop(self) -> None: ...

    def __iter__(self) -> Iterator[SourceFrame]: ...


class BrowserBridge(Protocol):
    """What the rest of the system needs from a browser."""

    def navigate(self, url: str, handle: PageHandle | None = None) -> PageHandle:
        """Load ``url``; reuse ``handle`` if given (seq counter continues)."""
        ...

    def close(self, handle: PageHandle) -> None: ...

    def start_capture(self, handle: PageHandle, max_fps: int = 15) -> CaptureStream: ...

    def resolve_selector(self, handle: PageHandle, selector: str) -> RegionRect:
        """Tight document-space bounding rect of the first match."""
        ...

    def inject_pointer(
        self, handle: PageHandle, kind: str, vp: ViewportPoint, button: str = "left", modifiers: int = 0
    ) -> None: ...

    def inject_wheel(self, handle: PageHandle, vp: ViewportPoint, delta_x: float, delta_y: float) -> None: ...

    def inject_key(self, handle: PageHandle, key: str, text: str = "") -> None: ...

    def scroll_to(self, handle: PageHandle, scroll_x: float, scroll_y: float) -> ViewportMetrics:
        """Scroll, clamped to document bounds; returns the new metrics."""
        ...

    def query_metrics(self, handle: PageHandle) -> ViewportMetrics: ...


@dataclass
class FrameStats:
    """Counters a capture loop can expose for diagnostics."""

    captured: int = 0
    delivered: int = 0
    suppressed: int = 0
    extras: dict = field(default_factory=dict)
