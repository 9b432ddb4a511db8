"""Deterministic in-process browser mock.

The mock serves a single synthetic page, ``mock://grid``: a 2000x3000
CSS-px document filled with a position-dependent color pattern, plus a
small dynamic badge region whose pixels encode the current frame seq and
the number of injected events. Crops, scrolls, and injections therefore
all have pixel-verifiable consequences, and identical operation sequences
produce bit-identical frame streams.

Viewport size and device scale are configurable through query
parameters, e.g. ``mock://grid?vw=1280&vh=800&scale=1.5``.
"""

from __future__ import annotations

import itertools
import re
import threading
import time
from typing import Callable, Iterator
from urllib.parse import parse_qs, urlsplit

import numpy as np

from ..errors import (
    CaptureConflictError,
    InjectionRejectedError,
    NavigationError,
    SelectorNotFoundError,
)
from ..geometry import RegionRect, ViewportMetrics, ViewportPoint
from .base import Bitmap, InjectedEvent, PageHandle, SourceFrame, POINTER_KINDS

DOC_W = 2000
DOC_H = 3000
DEFAULT_VIEWPORT = (1280, 800)

# Dynamic badge: the only part of the page that changes between frames.
# Placed at the bottom-right of the document, outside every other region,
# so panels over static content are byte-stable across frames.
STATUS_RECT = (1900, 2960, 64, 16)

# Document-space element rects (CSS px). The table mirrors the selector
# structure the built-in layout presets expect, so presets resolve fully
# against this page.
MOCK_REGIONS: dict[str, tuple[float, float, float, float]] = {
    "#header": (0, 0, 2000, 120),
    "#toolbar": (0, 120, 2000, 40),
    "#movie_player": (40, 140, 860, 480),
    ".ytp-chrome-bottom": (40, 620, 860, 48),
    "#related": (940, 140, 460, 800),
    "#comments": (40, 700, 860, 1200),
    "#map": (400, 160, 1600, 1560),
    "#pane": (0, 160, 400, 1400),
    "#map-controls": (1500, 1760, 420, 120),
    "#workspace": (200, 160, 1400, 900),
    "#filmstrip": (0, 160, 200, 1240),
    "#status": STATUS_RECT,
    "#hidden": (300, 300, 0, 0),
}

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*$")


def static_pixel(x: int, y: int) -> tuple[int, int, int, int]:
    """Reference pixel function for static page content (device px)."""
    return ((x * 3 + y * 7) & 255, (x * 5 + y * 11) & 255, (x ^ y) & 255, 255)


def badge_pixel(x: int, y: int, seq: int, events: int) -> tuple[int, int, int, int]:
    """Reference pixel function for the dynamic badge region (device px)."""
    base = x * 7 + y * 13 + seq * 101 + events * 211
    return (base & 255, (base + 85) & 255, (base + 170) & 255, 255)


def _static_block(x0: int, y0: int, w: int, h: int) -> Bitmap:
    xs = np.arange(x0, x0 + w, dtype=np.uint32)
    ys = np.arange(y0, y0 + h, dtype=np.uint32)[:, None]
    block = np.empty((h, w, 4), dtype=np.uint8)
    block[..., 0] = (xs * 3 + ys * 7) & 255
    block[..., 1] = (xs * 5 + ys * 11) & 255
    block[..., 2] = (xs ^ ys) & 255
    block[..., 3] = 255
    return block


def _badge_block(x0: int, y0: int, w: int, h: int, seq: int, events: int) -> Bitmap:
    xs = np.arange(x0, x0 + w, dtype=np.uint32)
    ys = np.arange(y0, y0 + h, dtype=np.uint32)[:, None]
    base = xs * 7 + ys * 13 + np.uint32(seq * 101 + events * 211)
    block = np.empty((h, w, 4), dtype=np.uint8)
    block[..., 0] = base & 255
    block[..., 1] = (base + 85) & 255
    block[..., 2] = (base + 170) & 255
    block[..., 3] = 255
    return block


class _PageState:
    def __init__(self, viewport_w: float, viewport_h: float, device_scale: float):
        self.viewport_w = viewport_w
        self.viewport_h = viewport_h
        self.device_scale = device_scale
        self.scroll_x = 0.0
        self.scroll_y = 0.0
        self.seq = 0
        self.events: list[InjectedEvent] = []
        self.capture_active = False

    def metrics(self) -> ViewportMetrics:
        return ViewportMetrics(
            scroll_x=self.scroll_x,
            scroll_y=self.scroll_y,
            viewport_w=self.viewport_w,
            viewport_h=self.viewport_h,
            device_scale=self.device_scale,
            document_w=DOC_W,
            document_h=DOC_H,
        )


class MockCaptureStream:
    """Capture stream that synthesizes one frame per pull."""

    def __init__(self, bridge: "MockBridge", handle: PageHandle, max_fps: int):
        self._bridge = bridge
        self._handle = handle
        self.max_fps = max_fps
        self._stopped = False

    def next_frame(self) -> SourceFrame:
        if self._stopped:
            raise CaptureConflictError("capture stream already stopped")
        return self._bridge._render_frame(self._handle)

    def stop(self) -> None:
        if not self._stopped:
            self._stopped = True
            self._bridge._end_capture(self._handle)

    def __iter__(self) -> Iterator[SourceFrame]:
        while not self._stopped:
            yield self.next_frame()


class MockBridge:
    """BrowserBridge implementation backed by the synthetic page model.

    ``clock`` supplies timestamps in milliseconds; tests inject a virtual
    clock for fully reproducible frames.
    """

    def __init__(self, clock: Callable[[], float] | None = None):
        self._clock = clock or (lambda: time.monotonic() * 1000.0)
        self._lock = threading.RLock()
        self._pages: dict[str, _PageState] = {}
        self._ids = itertools.count(1)
        self._pattern_cache: dict[float, Bitmap] = {}

    # -- navigation ------------------------------------------------------

    def navigate(self, url: str, handle: PageHandle | None = None) -> PageHandle:
        parts = urlsplit(url)
        if not parts.scheme or not _SCHEME_RE.match(parts.scheme):
            raise NavigationError(f"malformed URL: {url!r}")
        if parts.scheme != "mock":
            raise NavigationError(f"mock bridge cannot reach scheme {parts.scheme!r}")
        if parts.netloc != "grid":
            raise NavigationError(f"unknown mock page: {parts.netloc!r}")

        query = parse_qs(parts.query)

        def _num(name: str, default: float) -> float:
            try:
                return float(query[name][0]) if name in query else default
            except ValueError as exc:
                raise NavigationError(f"bad query parameter {name}: {exc}") from exc

        vw = _num("vw", DEFAULT_VIEWPORT[0])
        vh = _num("vh", DEFAULT_VIEWPORT[1])
        scale = _num("scale", 1.0)
        if vw <= 0 or vh <= 0 or scale <= 0:
            raise NavigationError("viewport and scale must be positive")

        with self._lock:
            if handle is not None:
                state = self._state(handle)
                seq = state.seq  # seq counter survives renavigation
                events = state.events
                fresh = _PageState(vw, vh, scale)
                fresh.seq = seq
                fresh.events = events
                self._pages[handle.session_id] = fresh
                handle.url = url
                return handle
            session_id = f"mock-{next(self._ids)}"
            self._pages[session_id] = _PageState(vw, vh, scale)
            return PageHandle(session_id=session_id, url=url)

    def close(self, handle: PageHandle) -> None:
        with self._lock:
            self._pages.pop(handle.session_id, None)

    def _state(self, handle: PageHandle) -> _PageState:
        state = self._pages.get(handle.session_id)
        if state is None:
            raise NavigationError(f"handle {handle.session_id} is closed")
        return state

    # -- capture ---------------------------------------------------------

    def start_capture(self, handle: PageHandle, max_fps: int = 15) -> MockCaptureStream:
        with self._lock:
            state = self._state(handle)
            if state.capture_active:
                raise CaptureConflictError(f"capture already active on {handle.session_id}")
            state.capture_active = True
        return MockCaptureStream(self, handle, max_fps)

    def _end_capture(self, handle: PageHandle) -> None:
        with self._lock:
            state = self._pages.get(handle.session_id)
            if state is not None:
                state.capture_active = False

    def _render_frame(self, handle: PageHandle) -> SourceFrame:
        with self._lock:
            state = self._state(handle)
            state.seq += 1
            seq = state.seq
            metrics = state.metrics()
            n_events = len(state.events)
            timestamp = self._clock()

        s = metrics.device_scale
        fw, fh = metrics.frame_w, metrics.frame_h
        pattern = self._doc_pattern(s)
        ox = min(round(metrics.scroll_x * s), pattern.shape[1] - fw)
        oy = min(round(metrics.scroll_y * s), pattern.shape[0] - fh)
        bitmap = pattern[oy : oy + fh, ox : ox + fw].copy()

        # Overlay the dynamic badge where it intersects the viewport.
        bx, by, bw, bh = STATUS_RECT
        bx0, by0 = round(bx * s), round(by * s)
        bx1, by1 = round((bx + bw) * s), round((by + bh) * s)
        ix0, iy0 = max(bx0, ox), max(by0, oy)
        ix1, iy1 = min(bx1, ox + fw), min(by1, oy + fh)
        if ix1 > ix0 and iy1 > iy0:
            block = _badge_block(ix0, iy0, ix1 - ix0, iy1 - iy0, seq, n_events)
            bitmap[iy0 - oy : iy1 - oy, ix0 - ox : ix1 - ox] = block

        bitmap.setflags(write=False)
        return SourceFrame(seq=seq, bitmap=bitmap, metrics=metrics, timestamp_ms=timestamp)

    def _doc_pattern(self, scale: float) -> Bitmap:
        with self._lock:
            cached = self._pattern_cache.get(scale)
            if cached is None:
                cached = _static_block(0, 0, round(DOC_W * scale), round(DOC_H * scale))
                cached.setflags(write=False)
                self._pattern_cache[scale] = cached
            return cached

    # -- selectors -------------------------------------------------------

    def resolve_selector(self, handle: PageHandle, selector: str) -> RegionRect:
        self._state(handle)
        rect = MOCK_REGIONS.get(selector)
        if rect is None:
            raise SelectorNotFoundError(f"no element matches {selector!r}")
        x, y, w, h = rect
        if w <= 0 or h <= 0:
            raise SelectorNotFoundError(f"{selector!r} matches only a zero-area element")
        return RegionRect(x, y, w, h)

    # -- input -----------------------------------------------------------

    def inject_pointer(
        self, handle: PageHandle, kind: str, vp: ViewportPoint, button: str = "left", modifiers: int = 0
    ) -> None:
        if kind not in POINTER_KINDS:
            raise InjectionRejectedError(f"unknown pointer kind {kind!r}")
        self._record(handle, kind, vp, {"button": button, "modifiers": modifiers})

    def inject_wheel(self, handle: PageHandle, vp: ViewportPoint, delta_x: float, delta_y: float) -> None:
        self._record(handle, "wheel", vp, {"delta_x": delta_x, "delta_y": delta_y})

    def inject_key(self, handle: PageHandle, key: str, text: str = "") -> None:
        with self._lock:
            state = self._state(handle)
            state.events.append(
                InjectedEvent(kind="key", x=None, y=None, payload={"key": key, "text": text}, index=len(state.events))
            )

    def _record(self, handle: PageHandle, kind: str, vp: ViewportPoint, payload: dict) -> None:
        with self._lock:
            state = self._state(handle)
            if not (0 <= vp.x <= state.viewport_w and 0 <= vp.y <= state.viewport_h):
                raise InjectionRejectedError(
                    f"point ({vp.x}, {vp.y}) outside viewport "
                    f"{state.viewport_w}x{state.viewport_h}; scroll first"
                )
            state.events.append(InjectedEvent(kind=kind, x=vp.x, y=vp.y, payload=payload, index=len(state.events)))

    # -- scroll / metrics --------------------------------------------------

    def scroll_to(self, handle: PageHandle, scroll_x: float, scroll_y: float) -> ViewportMetrics:
        with self._lock:
            state = self._state(handle)
            state.scroll_x, state.scroll_y = state.metrics().clamp_scroll(scroll_x, scroll_y)
            # Scrolls share the ordered log so tests can assert
            # scroll-before-inject sequencing.
            state.events.append(
                InjectedEvent(
                    kind="scroll",
                    x=state.scroll_x,
                    y=state.scroll_y,
                    payload={"requested_x": scroll_x, "requested_y": scroll_y},
                    index=len(state.events),
                )
            )
            return state.metrics()

    def query_metrics(self, handle: PageHandle) -> ViewportMetrics:
        with self._lock:
            return self._state(handle).metrics()

    # -- test observability ------------------------------------------------

    def injected_events(self, handle: PageHandle) -> list[InjectedEvent]:
        with self._lock:
            return list(self._state(handle).events)
