"""Network-level tests: a real server on a loopback socket, real clients."""

import asyncio
import json

from websockets.asyncio.client import connect

from btw.bridge.mock import MockBridge
from btw.config import load_config
from btw.policy import PanelPose
from btw.protocol import (
    Hello,
    InputEventMsg,
    LayoutAnnounce,
    PanelStateMsg,
    PanelTransformMsg,
    decode_message,
    encode_message,
    panel_id_hash,
)
from btw.server import PanelServer


def run(coro):
    return asyncio.run(asyncio.wait_for(coro, timeout=30))


async def start_server(**flags):
    flags.setdefault("port", 0)
    flags.setdefault("layout", "youtube")
    flags.setdefault("url", "mock://grid")
    config = load_config(flags=flags)
    bridge = MockBridge(clock=lambda: 0.0)
    server = PanelServer(config, bridge=bridge)
    port = await server.start()
    return server, bridge, port


async def say_hello(ws, name="test-client", token=""):
    await ws.send(encode_message(Hello(client_name=name, token=token)).decode())
    raw = await ws.recv()
    return decode_message(raw, binary=isinstance(raw, bytes))


def test_hello_gets_layout_announce():
    async def scenario():
        server, _, port = await start_server()
        try:
            async with connect(f"ws://127.0.0.1:{port}") as ws:
                announce = await say_hello(ws)
                assert isinstance(announce, LayoutAnnounce)
                assert announce.layout_name == "youtube"
                assert {p.panel_id for p in announce.panels} == {
                    "player", "controls", "comments", "recommendations",
                }
        finally:
            await server.stop()

    run(scenario())


def test_panel_frames_stream_monotone_per_panel():
    async def scenario():
        server, _, port = await start_server(max_fps=60)
        try:
            async with connect(f"ws://127.0.0.1:{port}", max_size=None) as ws:
                await say_hello(ws)
                seen: dict[int, list[int]] = {}
                binary_count = 0
                # 4 initial frames, then a click on the scrolled-out comments
                # panel auto-scrolls the page, which re-crops every
                # document-anchored panel and produces a second wave.
                clicked = False
                while binary_count < 7:
                    if binary_count >= 4 and not clicked:
                        clicked = True
                        event = InputEventMsg(panel_id="comments", kind="pointer-down", client_seq=1, u=0.5, v=0.5)
                        await ws.send(encode_message(event).decode())
                    raw = await ws.recv()
                    if not isinstance(raw, bytes):
                        continue
                    msg = decode_message(raw, binary=True)
                    binary_count += 1
                    seen.setdefault(msg.panel_id_hash, []).append(msg.source_seq)
                for seqs in seen.values():
                    assert seqs == sorted(seqs)
                    assert len(seqs) == len(set(seqs))
                known = {panel_id_hash(p) for p in ("player", "controls", "comments", "recommendations")}
                assert set(seen) <= known
        finally:
            await server.stop()

    run(scenario())


def test_input_event_reaches_bridge():
    async def scenario():
        server, bridge, port = await start_server()
        try:
            async with connect(f"ws://127.0.0.1:{port}", max_size=None) as ws:
                await say_hello(ws)
                event = InputEventMsg(panel_id="player", kind="pointer-down", client_seq=1, u=0.5, v=0.5)
                await ws.send(encode_message(event).decode())
                handle = server.session.handle
                for _ in range(100):
                    events = [e for e in bridge.injected_events(handle) if e.kind != "scroll"]
                    if events:
                        break
                    await asyncio.sleep(0.02)
                assert events and (events[0].x, events[0].y) == (470, 380)
        finally:
            await server.stop()

    run(scenario())


def test_transform_broadcasts_state_to_all_clients():
    async def scenario():
        server, _, port = await start_server()
        try:
            async with connect(f"ws://127.0.0.1:{port}", max_size=None) as one, connect(
                f"ws://127.0.0.1:{port}", max_size=None
            ) as two:
                await say_hello(one, "one")
                await say_hello(two, "two")
                transform = PanelTransformMsg(
                    panel_id="player",
                    pose=PanelPose(position=(0.0, 0.45, -1.1)),
                    client_seq=1,
                )
                await one.send(encode_message(transform).decode())

                async def next_state(ws):
                    while True:
                        raw = await ws.recv()
                        msg = decode_message(raw, binary=isinstance(raw, bytes))
                        if isinstance(msg, PanelStateMsg):
                            return msg

                state_one = await next_state(one)
                state_two = await next_state(two)
                for state in (state_one, state_two):
                    assert state.panel_id == "player"
                    assert state.input_mode == "ray"
                    assert not state.anchored
        finally:
            await server.stop()

    run(scenario())


def test_bad_token_rejected():
    async def scenario():
        server, _, port = await start_server(token="sesame")
        try:
            async with connect(f"ws://127.0.0.1:{port}") as ws:
                reply = await say_hello(ws, token="wrong")
                assert reply.code == "bad-token"
            async with connect(f"ws://127.0.0.1:{port}") as ws:
                announce = await say_hello(ws, token="sesame")
                assert isinstance(announce, LayoutAnnounce)
        finally:
            await server.stop()

    run(scenario())


def test_bad_protocol_version_rejected():
    async def scenario():
        server, _, port = await start_server()
        try:
            async with connect(f"ws://127.0.0.1:{port}") as ws:
                await ws.send(json.dumps({"type": "hello", "client_name": "x", "protocol_version": 2, "token": ""}))
                reply = decode_message(await ws.recv())
                assert reply.code == "bad-version"
        finally:
            await server.stop()

    run(scenario())


def test_unmatched_url_serves_fallback_panel():
    async def scenario():
        config = load_config(flags={"port": 0, "url": "mock://grid"})
        server = PanelServer(config, bridge=MockBridge(clock=lambda: 0.0))
        port = await server.start()
        try:
            async with connect(f"ws://127.0.0.1:{port}", max_size=None) as ws:
                announce = await say_hello(ws)
                assert announce.layout_name == "fallback"
                assert [p.panel_id for p in announce.panels] == ["page"]
                assert announce.panels[0].region.w == 1280
        finally:
            await server.stop()

    run(scenario())
