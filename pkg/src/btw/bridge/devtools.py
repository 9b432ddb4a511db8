"""Bridge adapter speaking a browser's remote-debugging wire protocol.

Connects to a running browser's debugging endpoint (e.g. started with
``--remote-debugging-port=9222``), drives one page target, and adapts
screencast frames, input dispatch, and runtime evaluation to the bridge
port. Screencast frames arrive compressed and are decoded to RGBA here so
downstream cropping is format-agnostic.

This adapter needs a live browser; automated tests cover the mock bridge
instead, and this module is exercised manually:

    btw serve --bridge devtools --devtools-endpoint http://127.0.0.1:9222 \\
        --url https://www.youtube.com/watch?v=...
"""

from __future__ import annotations

import base64
import io
import itertools
import json
import queue
import threading
import urllib.request
from typing import Iterator

import numpy as np

from ..errors import (
    BtwError,
    CaptureConflictError,
    InjectionRejectedError,
    NavigationError,
    SelectorNotFoundError,
)
from ..geometry import RegionRect, ViewportMetrics, ViewportPoint
from .base import PageHandle, SourceFrame, POINTER_KINDS

_POINTER_TYPES = {
    "pointer-down": "mousePressed",
    "pointer-move": "mouseMoved",
    "pointer-up": "mouseReleased",
}

_RESOLVE_JS = """
(() => {
  const el = document.querySelector(%s);
  if (!el) return null;
  const r = el.getBoundingClientRect();
  if (r.width <= 0 || r.height <= 0) return null;
  return JSON.stringify({
    x: r.left + window.scrollX, y: r.top + window.scrollY,
    w: r.width, h: r.height,
  });
})()
"""


class _Connection:
    """One devtools websocket with request/response and event dispatch."""

    def __init__(self, ws_url: str):
        from websockets.sync.client import connect

        self._ws = connect(ws_url, max_size=None)
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._pending: dict[int, tuple[threading.Event, list]] = {}
        self.events: "queue.Queue[dict]" = queue.Queue(maxsize=8)
        self._closed = False
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            while True:
                raw = self._ws.recv()
                message = json.loads(raw)
                if "id" in message:
                    with self._lock:
                        slot = self._pending.pop(message["id"], None)
                    if slot is not None:
                        slot[1].append(message)
                        slot[0].set()
                elif message.get("method") == "Page.screencastFrame":
                    self._on_screencast_frame(message["params"])
        except Exception:
            self._closed = True
            with self._lock:
                for event, box in self._pending.values():
                    box.append({"error": {"message": "connection closed"}})
                    event.set()
                self._pending.clear()

    def _on_screencast_frame(self, params: dict) -> None:
        # Ack immediately so the browser keeps streaming even if the
        # consumer is momentarily behind; drop the oldest frame when full.
        try:
            self.call("Page.screencastFrameAck", {"sessionId": params["sessionId"]}, wait=False)
        except BtwError:
            return
        while True:
            try:
                self.events.put_nowait(params)
                return
            except queue.Full:
                try:
                    self.events.get_nowait()
                except queue.Empty:
                    pass

    def call(self, method: str, params: dict | None = None, timeout: float = 30.0, wait: bool = True) -> dict:
        if self._closed:
            raise BtwError("devtools connection closed")
        request_id = next(self._ids)
        payload = json.dumps({"id": request_id, "method": method, "params": params or {}})
        if not wait:
            self._ws.send(payload)
            return {}
        event = threading.Event()
        box: list = []
        with self._lock:
            self._pending[request_id] = (event, box)
        self._ws.send(payload)
        if not event.wait(timeout):
            with self._lock:
                self._pending.pop(request_id, None)
            raise BtwError(f"devtools call {method} timed out after {timeout}s")
        response = box[0]
        if "error" in response:
            raise BtwError(f"devtools call {method} failed: {response['error'].get('message')}")
        return response.get("result", {})

    def close(self) -> None:
        self._closed = True
        try:
            self._ws.close()
        except Exception:
            pass


def _discover_page_ws(endpoint: str) -> str:
    """Resolve an http endpoint to the first page target's websocket URL."""
    if endpoint.startswith(("ws://", "wss://")):
        return endpoint
    url = endpoint.rstrip("/") + "/json/list"
    try:
        with urllib.request.urlopen(url, timeout=10) as response:
            targets = json.loads(response.read().decode("utf-8"))
    except Exception as exc:
        raise NavigationError(f"cannot reach devtools endpoint {endpoint}: {exc}") from exc
    for target in targets:
        if target.get("type") == "page" and target.get("webSocketDebuggerUrl"):
            return target["webSocketDebuggerUrl"]
    raise NavigationError(f"no debuggable page target at {endpoint}")


class DevtoolsCaptureStream:
    def __init__(self, bridge: "DevtoolsBridge", handle: PageHandle, max_fps: int):
        self._bridge = bridge
        self._handle = handle
        self.max_fps = max_fps
        self._stopped = False

    def next_frame(self) -> SourceFrame:
        if self._stopped:
            raise CaptureConflictError("capture stream already stopped")
        return self._bridge._next_screencast_frame()

    def stop(self) -> None:
        if not self._stopped:
            self._stopped = True
            self._bridge._stop_screencast()

    def __iter__(self) -> Iterator[SourceFrame]:
        while not self._stopped:
            yield self.next_frame()


class DevtoolsBridge:
    """BrowserBridge over the remote-debugging protocol. One page target."""

    def __init__(self, endpoint: str):
        self._endpoint = endpoint
        self._conn: _Connection | None = None
        self._handle: PageHandle | None = None
        self._seq = 0
        self._capture_active = False
        self._last_metrics: ViewportMetrics | None = None
        self._lock = threading.RLock()

    def _connection(self) -> _Connection:
        if self._conn is None:
            self._conn = _Connection(_discover_page_ws(self._endpoint))
            self._conn.call("Page.enable")
            self._conn.call("Runtime.enable")
        return self._conn

    # -- navigation ------------------------------------------------------

    def navigate(self, url: str, handle: PageHandle | None = None) -> PageHandle:
        conn = self._connection()
        result = conn.call("Page.navigate", {"url": url})
        if result.get("errorText"):
            raise NavigationError(f"navigation to {url} failed: {result['errorText']}")
        if handle is None:
            handle = self._handle or PageHandle(session_id="devtools-1", url=url)
        handle.url = url
        self._handle = handle
        return handle

    def close(self, handle: PageHandle) -> None:
        with self._lock:
            if self._conn is not None:
                if self._capture_active:
                    self._stop_screencast()
                self._conn.close()
                self._conn = None
            self._handle = None

    # -- capture ---------------------------------------------------------

    def start_capture(self, handle: PageHandle, max_fps: int = 15) -> DevtoolsCaptureStream:
        with self._lock:
            if self._capture_active:
                raise CaptureConflictError("capture already active")
            self._capture_active = True
        self._connection().call(
            "Page.startScreencast",
            {"format": "png", "everyNthFrame": 1, "quality": 90},
        )
        return DevtoolsCaptureStream(self, handle, max_fps)

    def _stop_screencast(self) -> None:
        with self._lock:
            self._capture_active = False
        if self._conn is not None:
            try:
                self._conn.call("Page.stopScreencast")
            except BtwError:
                pass

    def _next_screencast_frame(self) -> SourceFrame:
        from PIL import Image

        conn = self._connection()
        params = conn.events.get()
        metadata = params.get("metadata", {})
        raw = base64.b64decode(params["data"])
        img = Image.open(io.BytesIO(raw)).convert("RGBA")
        bitmap = np.asarray(img, dtype=np.uint8).copy()
        bitmap.setflags(write=False)

        layout = conn.call("Page.getLayoutMetrics")
        content = layout.get("cssContentSize", layout.get("contentSize", {}))
        viewport_w = float(metadata.get("deviceWidth") or bitmap.shape[1])
        viewport_h = float(metadata.get("deviceHeight") or bitmap.shape[0])
        scale = bitmap.shape[1] / viewport_w if viewport_w else 1.0
        metrics = ViewportMetrics(
            scroll_x=float(metadata.get("scrollOffsetX", 0.0)),
            scroll_y=float(metadata.get("scrollOffsetY", 0.0)),
            viewport_w=viewport_w,
            viewport_h=viewport_h,
            device_scale=scale,
            document_w=max(float(content.get("width", viewport_w)), viewport_w),
            document_h=max(float(content.get("height", viewport_h)), viewport_h),
        )
        with self._lock:
            self._seq += 1
            seq = self._seq
            self._last_metrics = metrics
        return SourceFrame(
            seq=seq,
            bitmap=bitmap,
            metrics=metrics,
            timestamp_ms=float(metadata.get("timestamp", 0.0)) * 1000.0,
        )

    # -- selectors ---------------------------------------------------------

    def resolve_selector(self, handle: PageHandle, selector: str) -> RegionRect:
        conn = self._connection()
        expression = _RESOLVE_JS % json.dumps(selector)
        result = conn.call("Runtime.evaluate", {"expression": expression, "returnByValue": True})
        value = result.get("result", {}).get("value")
        if not value:
            raise SelectorNotFoundError(f"no visible element matches {selector!r}")
        rect = json.loads(value)
        return RegionRect(rect["x"], rect["y"], rect["w"], rect["h"])

    # -- input ---------------------------------------------------------------

    def _check_viewport(self, vp: ViewportPoint) -> None:
        metrics = self._last_metrics
        if metrics is not None and not (0 <= vp.x <= metrics.viewport_w and 0 <= vp.y <= metrics.viewport_h):
            raise InjectionRejectedError(f"point ({vp.x}, {vp.y}) outside viewport")

    def inject_pointer(
        self, handle: PageHandle, kind: str, vp: ViewportPoint, button: str = "left", modifiers: int = 0
    ) -> None:
        if kind not in POINTER_KINDS:
            raise InjectionRejectedError(f"unknown pointer kind {kind!r}")
        self._check_viewport(vp)
        self._connection().call(
            "Input.dispatchMouseEvent",
            {
                "type": _POINTER_TYPES[kind],
                "x": vp.x,
                "y": vp.y,
                "button": button if kind != "pointer-move" else "none",
                "buttons": 1 if kind != "pointer-up" else 0,
                "clickCount": 1 if kind != "pointer-move" else 0,
                "modifiers": modifiers,
            },
        )

    def inject_wheel(self, handle: PageHandle, vp: ViewportPoint, delta_x: float, delta_y: float) -> None:
        self._check_viewport(vp)
        self._connection().call(
            "Input.dispatchMouseEvent",
            {"type": "mouseWheel", "x": vp.x, "y": vp.y, "deltaX": delta_x, "deltaY": delta_y},
        )

    def inject_key(self, handle: PageHandle, key: str, text: str = "") -> None:
        conn = self._connection()
        if text:
            conn.call("Input.insertText", {"text": text})
            return
        conn.call("Input.dispatchKeyEvent", {"type": "rawKeyDown", "key": key})
        conn.call("Input.dispatchKeyEvent", {"type": "keyUp", "key": key})

    # -- scroll / metrics -------------------------------------------------------

    def scroll_to(self, handle: PageHandle, scroll_x: float, scroll_y: float) -> ViewportMetrics:
        self._connection().call(
            "Runtime.evaluate",
            {"expression": f"window.scrollTo({float(scroll_x)}, {float(scroll_y)})"},
        )
        return self.query_metrics(handle)

    def query_metrics(self, handle: PageHandle) -> ViewportMetrics:
        conn = self._connection()
        layout = conn.call("Page.getLayoutMetrics")
        viewport = layout.get("cssVisualViewport", layout.get("visualViewport", {}))
        content = layout.get("cssContentSize", layout.get("contentSize", {}))
        ratio = conn.call(
            "Runtime.evaluate", {"expression": "window.devicePixelRatio", "returnByValue": True}
        )
        scale = float(ratio.get("result", {}).get("value", 1.0))
        viewport_w = float(viewport.get("clientWidth", 0.0)) or 1.0
        viewport_h = float(viewport.get("clientHeight", 0.0)) or 1.0
        metrics = ViewportMetrics(
            scroll_x=float(viewport.get("pageX", 0.0)),
            scroll_y=float(viewport.get("pageY", 0.0)),
            viewport_w=viewport_w,
            viewport_h=viewport_h,
            device_scale=scale,
            document_w=max(float(content.get("width", viewport_w)), viewport_w),
            document_h=max(float(content.get("height", viewport_h)), viewport_h),
        )
        with self._lock:
            self._last_metrics = metrics
        return metrics
