"""WebSocket server: frame fan-out and input intake for workspace clients.

Each client handshakes with a Hello, receives a LayoutAnnounce plus the
latest frame of every panel, then gets live panel frames. Outbound frames
are coalesced latest-wins per panel when a client is slow; control
messages are never dropped and never reordered.

Machine-readable lines go to stdout (``LISTENING <port>``, ``SESSION
CONNECT/DISCONNECT <name>``); logs go to stderr.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
from dataclasses import dataclass, field

from websockets.asyncio.server import ServerConnection, serve
from websockets.exceptions import ConnectionClosed

from .bridge.base import BrowserBridge
from .config import ServerConfig
from .decompose import PanelFrame, resolve_layout
from .errors import BtwError, DecodeError
from .layouts import LayoutStore, fallback_layout
from .protocol import (
    ERR_BAD_MESSAGE,
    ERR_BAD_TOKEN,
    ERR_BAD_VERSION,
    FORMAT_PNG,
    FORMAT_RAW,
    PROTOCOL_VERSION,
    ErrorMsg,
    Hello,
    InputEventMsg,
    PanelFrameMsg,
    PanelStateMsg,
    PanelTransformMsg,
    decode_message,
    encode_message,
    panel_frame_to_msg,
)
from .session import Session

log = logging.getLogger("btw.server")


@dataclass
class _Client:
    name: str
    conn: ServerConnection
    control: list[bytes] = field(default_factory=list)
    frames: dict[str, bytes] = field(default_factory=dict)
    wakeup: asyncio.Event = field(default_factory=asyncio.Event)

    def queue_control(self, message) -> None:
        self.control.append(encode_message(message))
        self.wakeup.set()

    def queue_frame(self, panel_id: str, encoded: bytes) -> None:
        # Latest-wins per panel: stale pixels are recoverable, so a slow
        # client only ever sees the newest frame of each panel.
        self.frames[panel_id] = encoded
        self.wakeup.set()


class PanelServer:
    """Owns the bridge session and serves workspace clients over TCP."""

    def __init__(
        self,
        config: ServerConfig,
        bridge: BrowserBridge | None = None,
        store: LayoutStore | None = None,
    ):
        self.config = config
        self.store = store or LayoutStore()
        if config.layout_dir:
            self.store.load_directory(config.layout_dir)
        self.bridge = bridge if bridge is not None else self._make_bridge()
        self.session: Session | None = None
        self.port: int | None = None
        self._server = None
        self._clients: dict[int, _Client] = {}
        self._client_ids = itertools.count(1)
        self._capture_task: asyncio.Task | None = None
        self._frame_format = FORMAT_PNG if config.frame_format == "png" else FORMAT_RAW
        self._stopping = asyncio.Event()

    def _make_bridge(self) -> BrowserBridge:
        if self.config.bridge == "devtools":
            from .bridge.devtools import DevtoolsBridge

            return DevtoolsBridge(self.config.devtools_endpoint)
        from .bridge.mock import MockBridge

        return MockBridge()

    # -- lifecycle -----------------------------------------------------------

    async def start(self) -> int:
        handle = await asyncio.to_thread(self.bridge.navigate, self.config.url)
        layout_doc = None
        if self.config.layout:
            layout_doc = self.store.get(self.config.layout)
            if layout_doc is None:
                raise BtwError(f"no layout named {self.config.layout!r}")
        else:
            layout_doc = self.store.match(self.config.url)
        if layout_doc is None:
            metrics = await asyncio.to_thread(self.bridge.query_metrics, handle)
            layout_doc = fallback_layout(metrics.viewport_w, metrics.viewport_h)
        resolved = await asyncio.to_thread(resolve_layout, layout_doc, self.bridge, handle)
        self.session = Session(
            self.bridge,
            handle,
            resolved,
            policy=self.config.policy,
            auto_scroll=self.config.auto_scroll,
        )

        self._server = await serve(self._handle_client, self.config.host, self.config.port)
        self.port = self._server.sockets[0].getsockname()[1]
        self._capture_task = asyncio.create_task(self._capture_loop())
        print(f"LISTENING {self.port}", flush=True)
        log.info("serving layout %r from %s on port %d", resolved.name, self.config.url, self.port)
        return self.port

    async def serve_forever(self) -> None:
        await self._stopping.wait()

    async def stop(self) -> None:
        self._stopping.set()
        if self._capture_task is not None:
            self._capture_task.cancel()
            try:
                await self._capture_task
            except (asyncio.CancelledError, Exception):
                pass
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        await asyncio.to_thread(self.bridge.close, self.session.handle)

    # -- capture fan-out -------------------------------------------------------

    async def _capture_loop(self) -> None:
        assert self.session is not None
        period = 1.0 / self.config.max_fps
        stream = await asyncio.to_thread(self.bridge.start_capture, self.session.handle, self.config.max_fps)
        try:
            while True:
                started = asyncio.get_running_loop().time()
                frame = await asyncio.to_thread(stream.next_frame)
                emitted = self.session.process_frame(frame)
                if emitted and self._clients:
                    encoded = [(pf.panel_id, self._encode_frame(pf)) for pf in emitted]
                    for client in self._clients.values():
                        for panel_id, data in encoded:
                            client.queue_frame(panel_id, data)
                elapsed = asyncio.get_running_loop().time() - started
                await asyncio.sleep(max(period - elapsed, 0.0))
        except asyncio.CancelledError:
            raise
        finally:
            await asyncio.to_thread(stream.stop)

    def _encode_frame(self, pf: PanelFrame) -> bytes:
        return encode_message(panel_frame_to_msg(pf, self._frame_format))

    # -- client handling ---------------------------------------------------------

    async def _handle_client(self, conn: ServerConnection) -> None:
        assert self.session is not None
        try:
            raw = await asyncio.wait_for(conn.recv(), timeout=10.0)
            hello = decode_message(raw, binary=isinstance(raw, bytes))
        except (TimeoutError, asyncio.TimeoutError, ConnectionClosed):
            return
        except DecodeError as exc:
            await self._reject(conn, ErrorMsg(ERR_BAD_MESSAGE, str(exc)))
            return
        if not isinstance(hello, Hello):
            await self._reject(conn, ErrorMsg(ERR_BAD_MESSAGE, "expected hello"))
            return
        if hello.protocol_version != PROTOCOL_VERSION:
            await self._reject(
                conn, ErrorMsg(ERR_BAD_VERSION, f"server speaks version {PROTOCOL_VERSION}")
            )
            return
        if self.config.token and hello.token != self.config.token:
            await self._reject(conn, ErrorMsg(ERR_BAD_TOKEN, "bad or missing token"))
            return

        client_key = next(self._client_ids)
        client = _Client(name=hello.client_name or f"client-{client_key}", conn=conn)
        self._clients[client_key] = client
        print(f"SESSION CONNECT {client.name}", flush=True)

        client.queue_control(self.session.announce(self.config.url))
        for pf in self.session.last_frames():
            client.queue_frame(pf.panel_id, self._encode_frame(pf))

        sender = asyncio.create_task(self._sender_loop(client))
        try:
            await self._receive_loop(client, f"client-{client_key}")
        finally:
            sender.cancel()
            try:
                await sender
            except asyncio.CancelledError:
                pass
            del self._clients[client_key]
            print(f"SESSION DISCONNECT {client.name}", flush=True)

    async def _reject(self, conn: ServerConnection, error: ErrorMsg) -> None:
        try:
            await conn.send(encode_message(error).decode("utf-8"))
            await conn.close()
        except ConnectionClosed:
            pass

    async def _sender_loop(self, client: _Client) -> None:
        while True:
            await client.wakeup.wait()
            client.wakeup.clear()
            control, client.control = client.control, []
            frames, client.frames = client.frames, {}
            try:
                for data in control:
                    await client.conn.send(data.decode("utf-8"))
                for data in frames.values():
                    await client.conn.send(data)
            except ConnectionClosed:
                return

    async def _receive_loop(self, client: _Client, client_id: str) -> None:
        assert self.session is not None
        try:
            async for raw in client.conn:
                try:
                    message = decode_message(raw, binary=isinstance(raw, bytes))
                except DecodeError as exc:
                    client.queue_control(ErrorMsg(ERR_BAD_MESSAGE, str(exc)))
                    continue
                if isinstance(message, InputEventMsg):
                    outcome = await asyncio.to_thread(self.session.handle_input, message, client_id)
                    if not outcome.ok:
                        client.queue_control(outcome.error)
                elif isinstance(message, PanelTransformMsg):
                    result = await asyncio.to_thread(self.session.handle_panel_transform, message, client_id)
                    if isinstance(result, PanelStateMsg):
                        for other in self._clients.values():
                            other.queue_control(result)
                    else:
                        client.queue_control(result)
                elif isinstance(message, PanelFrameMsg):
                    client.queue_control(ErrorMsg(ERR_BAD_MESSAGE, "clients do not send panel frames"))
                else:
                    client.queue_control(ErrorMsg(ERR_BAD_MESSAGE, f"unexpected {type(message).__name__}"))
        except ConnectionClosed:
            pass


async def run_server(config: ServerConfig, bridge: BrowserBridge | None = None) -> None:
    """Start a server and block until cancelled (used by the CLI)."""
    server = PanelServer(config, bridge=bridge)
    await server.start()
    try:
        await server.serve_forever()
    finally:
        await server.stop()
