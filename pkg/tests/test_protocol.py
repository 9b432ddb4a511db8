import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from btw.decompose import PanelFrame
from btw.errors import DecodeError
from btw.geometry import FrameRect, RegionRect
from btw.policy import PanelPose
from btw.protocol import (
    FORMAT_PNG,
    FORMAT_RAW,
    AnnouncedPanel,
    ErrorMsg,
    Hello,
    InputEventMsg,
    LayoutAnnounce,
    PanelFrameMsg,
    PanelStateMsg,
    PanelTransformMsg,
    decode_message,
    encode_message,
    frame_crop_rect,
    msg_to_bitmap,
    panel_frame_to_msg,
    panel_id_hash,
)

POSE = PanelPose(position=(0.1, 0.45, -0.8), orientation=(1, 0, 0, 0), size=(0.6, 0.4))

SAMPLES = [
    Hello(client_name="workbench", protocol_version=1, token="s3cret"),
    LayoutAnnounce(
        layout_name="youtube",
        url="mock://grid",
        panels=(
            AnnouncedPanel(
                panel_id="player",
                display_name="Player",
                role="primary-content",
                region=RegionRect(40, 140, 860, 480),
                anchoring="document",
                zone="midair-center",
                distance="mid",
                scale=1.0,
                interaction="auto",
                pose=POSE,
                anchored=False,
                input_mode="ray",
            ),
        ),
    ),
    InputEventMsg(panel_id="player", kind="pointer-down", client_seq=3, u=0.5, v=0.25),
    InputEventMsg(panel_id="player", kind="wheel", client_seq=4, u=0.1, v=0.9, delta_x=0.0, delta_y=-120.0),
    InputEventMsg(panel_id="player", kind="key", client_seq=5, key="Enter", text="\r"),
    PanelTransformMsg(panel_id="comments", pose=POSE, client_seq=6),
    PanelStateMsg(panel_id="comments", pose=POSE, anchored=True, input_mode="touch"),
    ErrorMsg(code="unknown-panel", detail="no panel 'x'"),
]


class TestRoundTrip:
    @pytest.mark.parametrize("message", SAMPLES, ids=lambda m: type(m).__name__ + str(SAMPLES.index(m) if m in SAMPLES else ""))
    def test_text_round_trip(self, message):
        data = encode_message(message)
        assert decode_message(data) == message
        assert decode_message(data, binary=False) == message

    def test_panel_frame_round_trip_bit_exact(self):
        payload = bytes(range(2 * 2 * 4))
        msg = PanelFrameMsg(
            panel_id_hash=panel_id_hash("player"), source_seq=9, x=4, y=6, w=2, h=2,
            format=FORMAT_RAW, payload=payload,
        )
        data = encode_message(msg)
        assert len(data) == 24 + len(payload)
        got = decode_message(data)
        assert got == msg
        assert got.payload == payload
        assert decode_message(data, binary=True) == msg

    def test_off_viewport_frame(self):
        msg = PanelFrameMsg(panel_id_hash=1, source_seq=2, x=0, y=0, w=0, h=0, format=FORMAT_RAW, payload=b"")
        got = decode_message(encode_message(msg))
        assert got.off_viewport
        assert frame_crop_rect(got) is None

    def test_header_is_little_endian(self):
        msg = PanelFrameMsg(panel_id_hash=0x01020304, source_seq=1, x=0, y=0, w=1, h=1, format=0, payload=b"\0" * 4)
        data = encode_message(msg)
        assert data[:4] == b"\x04\x03\x02\x01"
        assert data[16] == 0
        assert data[17:24] == b"\x00" * 7


class TestDecodeErrors:
    def test_truncated_binary(self):
        msg = PanelFrameMsg(panel_id_hash=1, source_seq=2, x=0, y=0, w=2, h=2, format=0, payload=b"\0" * 16)
        data = encode_message(msg)
        with pytest.raises(DecodeError):
            decode_message(data[:20], binary=True)
        with pytest.raises(DecodeError):
            decode_message(data[:-1], binary=True)

    def test_truncated_text(self):
        data = encode_message(Hello(client_name="x"))
        with pytest.raises(DecodeError) as err:
            decode_message(data[:-2])
        assert err.value.offset >= 0

    def test_unknown_type(self):
        with pytest.raises(DecodeError):
            decode_message(b'{"type":"teleport"}')

    def test_bad_unit_point(self):
        data = encode_message(InputEventMsg(panel_id="p", kind="pointer-up", client_seq=1, u=0.5, v=0.5))
        broken = data.replace(b'"u":0.5', b'"u":1.5')
        with pytest.raises(DecodeError):
            decode_message(broken)

    def test_bad_format_byte(self):
        msg = PanelFrameMsg(panel_id_hash=1, source_seq=2, x=0, y=0, w=1, h=1, format=0, payload=b"\0" * 4)
        data = bytearray(encode_message(msg))
        data[16] = 7
        with pytest.raises(DecodeError):
            decode_message(bytes(data), binary=True)

    def test_wrong_payload_length(self):
        msg = PanelFrameMsg(panel_id_hash=1, source_seq=2, x=0, y=0, w=2, h=2, format=0, payload=b"\0" * 16)
        data = encode_message(msg) + b"extra"
        with pytest.raises(DecodeError):
            decode_message(data, binary=True)

    def test_fuzz_never_crashes(self):
        rng = random.Random(20260811)
        for _ in range(5000):
            blob = rng.randbytes(rng.randint(0, 64))
            try:
                decode_message(blob)
            except DecodeError:
                pass


class TestPayloadHelpers:
    def _frame(self, rng):
        bitmap = rng.integers(0, 256, size=(6, 5, 4), dtype=np.uint8)
        return PanelFrame(panel_id="player", source_seq=4, bitmap=bitmap, crop=FrameRect(3, 7, 5, 6))

    def test_raw_payload_round_trip(self):
        pf = self._frame(np.random.default_rng(5))
        msg = panel_frame_to_msg(pf, FORMAT_RAW)
        assert msg.panel_id_hash == panel_id_hash("player")
        assert (msg.x, msg.y, msg.w, msg.h) == (3, 7, 5, 6)
        assert np.array_equal(msg_to_bitmap(msg), pf.bitmap)

    def test_png_payload_round_trip(self):
        pf = self._frame(np.random.default_rng(6))
        msg = panel_frame_to_msg(pf, FORMAT_PNG)
        assert msg.payload.startswith(b"\x89PNG")
        decoded = decode_message(encode_message(msg))
        assert np.array_equal(msg_to_bitmap(decoded), pf.bitmap)

    def test_off_viewport_payload(self):
        pf = PanelFrame(panel_id="gone", source_seq=2, bitmap=None, crop=None, off_viewport=True)
        msg = panel_frame_to_msg(pf)
        assert msg.off_viewport and msg.payload == b""
        assert msg_to_bitmap(msg) is None


@given(
    kind=st.sampled_from(["pointer-down", "pointer-move", "pointer-up"]),
    u=st.floats(0, 1), v=st.floats(0, 1),
    seq=st.integers(1, 2**31),
    button=st.sampled_from(["left", "right", "middle"]),
    modifiers=st.integers(0, 15),
)
def test_pointer_event_round_trip_property(kind, u, v, seq, button, modifiers):
    message = InputEventMsg(
        panel_id="p", kind=kind, client_seq=seq, u=u, v=v, button=button, modifiers=modifiers
    )
    assert decode_message(encode_message(message)) == message


@given(
    px=st.floats(-2, 2), py=st.floats(-2, 2), pz=st.floats(-2, 2),
    sw=st.floats(0.01, 3), sh=st.floats(0.01, 3),
    anchored=st.booleans(),
)
def test_state_round_trip_property(px, py, pz, sw, sh, anchored):
    message = PanelStateMsg(
        panel_id="p",
        pose=PanelPose(position=(px, py, pz), size=(sw, sh)),
        anchored=anchored,
        input_mode="touch",
    )
    assert decode_message(encode_message(message)) == message
