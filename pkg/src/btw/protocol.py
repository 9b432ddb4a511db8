"""Wire protocol between the panel server and workspace clients.

Control messages travel as canonical JSON text frames (sorted keys,
compact separators). Panel pixel frames travel as binary frames so image
payloads are never base64-inflated:

    offset  size  field
    0       4     panel id hash (crc32 of the panel id, u32)
    4       4     source seq (u32)
    8       2     crop x (u16)        device px within the source frame
    10      2     crop y (u16)
    12      2     crop w (u16)        w = h = 0 marks an off-viewport panel
    14      2     crop h (u16)
    16      1     format (0 raw RGBA, 1 PNG)
    17      7     reserved (zero)
    24      ...   payload

All integers little-endian. ``decode_message`` is total: malformed input
raises :class:`DecodeError` with a byte offset, never anything else.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .decompose import PanelFrame
from .errors import DecodeError
from .geometry import FrameRect, RegionRect
from .policy import PanelPose

PROTOCOL_VERSION = 1

FORMAT_RAW = 0
FORMAT_PNG = 1

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_FRAME_HEADER = struct.Struct("<IIHHHHB7x")

POINTER_EVENT_KINDS = ("pointer-down", "pointer-move", "pointer-up")
EVENT_KINDS = POINTER_EVENT_KINDS + ("wheel", "key")


def panel_id_hash(panel_id: str) -> int:
    return zlib.crc32(panel_id.encode("utf-8")) & 0xFFFFFFFF


# -- message types -----------------------------------------------------------


@dataclass(frozen=True)
class Hello:
    client_name: str
    protocol_version: int = PROTOCOL_VERSION
    token: str = ""


@dataclass(frozen=True)
class AnnouncedPanel:
    """One panel as presented to clients: region, semantics, initial state."""

    panel_id: str
    display_name: str
    role: str
    region: RegionRect
    anchoring: str
    zone: str
    distance: str
    scale: float
    interaction: str
    pose: PanelPose
    anchored: bool
    input_mode: str


@dataclass(frozen=True)
class LayoutAnnounce:
    layout_name: str
    url: str
    panels: tuple[AnnouncedPanel, ...]
    protocol_version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class PanelFrameMsg:
    panel_id_hash: int
    source_seq: int
    x: int
    y: int
    w: int
    h: int
    format: int
    payload: bytes

    @property
    def off_viewport(self) -> bool:
        return self.w == 0 and self.h == 0


@dataclass(frozen=True)
class InputEventMsg:
    panel_id: str
    kind: str
    client_seq: int
    u: float | None = None
    v: float | None = None
    button: str = "left"
    modifiers: int = 0
    delta_x: float = 0.0
    delta_y: float = 0.0
    key: str = ""
    text: str = ""


@dataclass(frozen=True)
class PanelTransformMsg:
    panel_id: str
    pose: PanelPose
    client_seq: int


@dataclass(frozen=True)
class PanelStateMsg:
    panel_id: str
    pose: PanelPose
    anchored: bool
    input_mode: str


@dataclass(frozen=True)
class ErrorMsg:
    code: str
    detail: str


Message = (
    Hello | LayoutAnnounce | PanelFrameMsg | InputEventMsg | PanelTransformMsg | PanelStateMsg | ErrorMsg
)

ERR_UNKNOWN_PANEL = "unknown-panel"
ERR_OUT_OF_VIEWPORT = "out-of-viewport"
ERR_BAD_SEQ = "bad-seq"
ERR_BAD_VERSION = "bad-version"
ERR_BAD_TOKEN = "bad-token"
ERR_BAD_MESSAGE = "bad-message"
ERR_INVALID_INPUT = "invalid-input"


# -- JSON <-> message --------------------------------------------------------


def _pose_to_dict(pose: PanelPose) -> dict:
    return {
        "position": list(pose.position),
        "orientation": list(pose.orientation),
        "size": list(pose.size),
    }


def _vec(obj, name: str, length: int) -> tuple:
    if not isinstance(obj, list) or len(obj) != length:
        raise DecodeError(f"{name} must be a list of {length} numbers")
    for v in obj:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise DecodeError(f"{name} must contain only numbers")
    return tuple(float(v) for v in obj)


def _pose_from_dict(obj) -> PanelPose:
    if not isinstance(obj, dict):
        raise DecodeError("pose must be an object")
    return PanelPose(
        position=_vec(obj.get("position"), "pose.position", 3),
        orientation=_vec(obj.get("orientation"), "pose.orientation", 4),
        size=_vec(obj.get("size"), "pose.size", 2),
    )


def _require(obj: dict, key: str, kind: type | tuple):
    if key not in obj:
        raise DecodeError(f"missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) and kind is not bool:
        raise DecodeError(f"field {key!r} has wrong type")
    if not isinstance(value, kind):
        raise DecodeError(f"field {key!r} has wrong type")
    return value


def _number(obj: dict, key: str, default=None) -> float:
    if key not in obj and default is not None:
        return default
    return float(_require(obj, key, (int, float)))


def _hello_to_dict(m: Hello) -> dict:
    return {"client_name": m.client_name, "protocol_version": m.protocol_version, "token": m.token}


def _hello_from_dict(obj: dict) -> Hello:
    return Hello(
        client_name=_require(obj, "client_name", str),
        protocol_version=int(_require(obj, "protocol_version", int)),
        token=str(obj.get("token", "")),
    )


def _announce_to_dict(m: LayoutAnnounce) -> dict:
    return {
        "layout_name": m.layout_name,
        "url": m.url,
        "protocol_version": m.protocol_version,
        "panels": [
            {
                "panel_id": p.panel_id,
                "display_name": p.display_name,
                "role": p.role,
                "region": {"x": p.region.x, "y": p.region.y, "w": p.region.w, "h": p.region.h},
                "anchoring": p.anchoring,
                "zone": p.zone,
                "distance": p.distance,
                "scale": p.scale,
                "interaction": p.interaction,
                "pose": _pose_to_dict(p.pose),
                "anchored": p.anchored,
                "input_mode": p.input_mode,
            }
            for p in m.panels
        ],
    }


def _announce_from_dict(obj: dict) -> LayoutAnnounce:
    panels_raw = _require(obj, "panels", list)
    panels = []
    for p in panels_raw:
        if not isinstance(p, dict):
            raise DecodeError("panel entry must be an object")
        region = _require(p, "region", dict)
        panels.append(
            AnnouncedPanel(
                panel_id=_require(p, "panel_id", str),
                display_name=_require(p, "display_name", str),
                role=_require(p, "role", str),
                region=RegionRect(
                    _number(region, "x"), _number(region, "y"), _number(region, "w"), _number(region, "h")
                ),
                anchoring=_require(p, "anchoring", str),
                zone=_require(p, "zone", str),
                distance=_require(p, "distance", str),
                scale=_number(p, "scale"),
                interaction=_require(p, "interaction", str),
                pose=_pose_from_dict(_require(p, "pose", dict)),
                anchored=_require(p, "anchored", bool),
                input_mode=_require(p, "input_mode", str),
            )
        )
    return LayoutAnnounce(
        layout_name=_require(obj, "layout_name", str),
        url=_require(obj, "url", str),
        protocol_version=int(_require(obj, "protocol_version", int)),
        panels=tuple(panels),
    )


def _input_to_dict(m: InputEventMsg) -> dict:
    d: dict = {"panel_id": m.panel_id, "kind": m.kind, "client_seq": m.client_seq}
    if m.kind in POINTER_EVENT_KINDS or m.kind == "wheel":
        d["u"] = m.u
        d["v"] = m.v
    if m.kind in POINTER_EVENT_KINDS:
        d["button"] = m.button
        d["modifiers"] = m.modifiers
    if m.kind == "wheel":
        d["delta_x"] = m.delta_x
        d["delta_y"] = m.delta_y
    if m.kind == "key":
        d["key"] = m.key
        d["text"] = m.text
    return d


def _input_from_dict(obj: dict) -> InputEventMsg:
    kind = _require(obj, "kind", str)
    if kind not in EVENT_KINDS:
        raise DecodeError(f"unknown event kind {kind!r}")
    u = v = None
    if kind in POINTER_EVENT_KINDS or kind == "wheel":
        u = _number(obj, "u")
        v = _number(obj, "v")
        if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
            raise DecodeError(f"unit point ({u}, {v}) outside [0,1]^2")
    return InputEventMsg(
        panel_id=_require(obj, "panel_id", str),
        kind=kind,
        client_seq=int(_require(obj, "client_seq", int)),
        u=u,
        v=v,
        button=str(obj.get("button", "left")),
        modifiers=int(obj.get("modifiers", 0)),
        delta_x=_number(obj, "delta_x", 0.0),
        delta_y=_number(obj, "delta_y", 0.0),
        key=str(obj.get("key", "")),
        text=str(obj.get("text", "")),
    )


def _transform_to_dict(m: PanelTransformMsg) -> dict:
    return {"panel_id": m.panel_id, "pose": _pose_to_dict(m.pose), "client_seq": m.client_seq}


def _transform_from_dict(obj: dict) -> PanelTransformMsg:
    return PanelTransformMsg(
        panel_id=_require(obj, "panel_id", str),
        pose=_pose_from_dict(_require(obj, "pose", dict)),
        client_seq=int(_require(obj, "client_seq", int)),
    )


def _state_to_dict(m: PanelStateMsg) -> dict:
    return {
        "panel_id": m.panel_id,
        "pose": _pose_to_dict(m.pose),
        "anchored": m.anchored,
        "input_mode": m.input_mode,
    }


def _state_from_dict(obj: dict) -> PanelStateMsg:
    return PanelStateMsg(
        panel_id=_require(obj, "panel_id", str),
        pose=_pose_from_dict(_require(obj, "pose", dict)),
        anchored=_require(obj, "anchored", bool),
        input_mode=_require(obj, "input_mode", str),
    )


def _error_to_dict(m: ErrorMsg) -> dict:
    return {"code": m.code, "detail": m.detail}


def _error_from_dict(obj: dict) -> ErrorMsg:
    return ErrorMsg(code=_require(obj, "code", str), detail=_require(obj, "detail", str))


_TEXT_TYPES = {
    "hello": (Hello, _hello_to_dict, _hello_from_dict),
    "layout_announce": (LayoutAnnounce, _announce_to_dict, _announce_from_dict),
    "input_event": (InputEventMsg, _input_to_dict, _input_from_dict),
    "panel_transform": (PanelTransformMsg, _transform_to_dict, _transform_from_dict),
    "panel_state": (PanelStateMsg, _state_to_dict, _state_from_dict),
    "error": (ErrorMsg, _error_to_dict, _error_from_dict),
}

_TYPE_BY_CLASS = {cls: name for name, (cls, _, _) in _TEXT_TYPES.items()}


# -- encode / decode ----------------------------------------------------------


def encode_message(m: Message) -> bytes:
    """Encode a message to its wire bytes (binary for panel frames)."""
    if isinstance(m, PanelFrameMsg):
        header = _FRAME_HEADER.pack(m.panel_id_hash, m.source_seq, m.x, m.y, m.w, m.h, m.format)
        return header + m.payload
    name = _TYPE_BY_CLASS.get(type(m))
    if name is None:
        raise TypeError(f"not a protocol message: {type(m).__name__}")
    to_dict = _TEXT_TYPES[name][1]
    body = {"type": name, **to_dict(m)}
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _decode_binary(data: bytes) -> PanelFrameMsg:
    if len(data) < _FRAME_HEADER.size:
        raise DecodeError(f"binary frame shorter than {_FRAME_HEADER.size}-byte header", len(data))
    pid_hash, seq, x, y, w, h, fmt = _FRAME_HEADER.unpack_from(data)
    payload = data[_FRAME_HEADER.size :]
    if fmt not in (FORMAT_RAW, FORMAT_PNG):
        raise DecodeError(f"unknown frame format {fmt}", 16)
    if (w == 0) != (h == 0):
        raise DecodeError(f"degenerate crop {w}x{h}", 12)
    if w == 0:
        if payload:
            raise DecodeError("off-viewport frame must have empty payload", _FRAME_HEADER.size)
    elif fmt == FORMAT_RAW:
        if len(payload) != w * h * 4:
            raise DecodeError(f"raw payload is {len(payload)} bytes, expected {w * h * 4}", _FRAME_HEADER.size)
    else:
        if not payload.startswith(_PNG_SIGNATURE):
            raise DecodeError("PNG payload lacks PNG signature", _FRAME_HEADER.size)
    return PanelFrameMsg(
        panel_id_hash=pid_hash, source_seq=seq, x=x, y=y, w=w, h=h, format=fmt, payload=payload
    )


def _decode_text(data: bytes) -> Message:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"invalid UTF-8: {exc.reason}", exc.start) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"invalid JSON: {exc.msg}", exc.pos) from None
    except RecursionError:
        raise DecodeError("JSON nesting too deep") from None
    if not isinstance(obj, dict):
        raise DecodeError("control message must be a JSON object")
    kind = obj.get("type")
    if not isinstance(kind, str) or kind not in _TEXT_TYPES:
        raise DecodeError(f"unknown message type {kind!r}")
    from_dict = _TEXT_TYPES[kind][2]
    try:
        return from_dict(obj)
    except DecodeError:
        raise
    except Exception as exc:  # field-level validation must never escape as a crash
        raise DecodeError(f"invalid {kind} message: {exc}") from None


def decode_message(data: bytes | str, binary: bool | None = None) -> Message:
    """Decode wire bytes into a message.

    When the transport does not say whether the frame was text or binary,
    pass ``binary=None`` and the payload is sniffed: JSON objects start
    with ``{``, binary frames do not.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
        binary = False
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise DecodeError(f"expected bytes, got {type(data).__name__}")
    data = bytes(data)
    if binary is None:
        binary = not data.lstrip(b" \t\r\n").startswith(b"{")
    return _decode_binary(data) if binary else _decode_text(data)


# -- panel frame payload helpers ----------------------------------------------


def panel_frame_to_msg(frame: PanelFrame, fmt: int = FORMAT_RAW) -> PanelFrameMsg:
    """Pack a decomposed panel frame for the wire."""
    if frame.off_viewport:
        return PanelFrameMsg(
            panel_id_hash=panel_id_hash(frame.panel_id),
            source_seq=frame.source_seq,
            x=0,
            y=0,
            w=0,
            h=0,
            format=FORMAT_RAW,
            payload=b"",
        )
    if fmt == FORMAT_RAW:
        payload = frame.bitmap.tobytes()
    elif fmt == FORMAT_PNG:
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(frame.bitmap, mode="RGBA").save(buf, format="PNG")
        payload = buf.getvalue()
    else:
        raise ValueError(f"unknown frame format {fmt}")
    return PanelFrameMsg(
        panel_id_hash=panel_id_hash(frame.panel_id),
        source_seq=frame.source_seq,
        x=frame.crop.x,
        y=frame.crop.y,
        w=frame.crop.w,
        h=frame.crop.h,
        format=fmt,
        payload=payload,
    )


def msg_to_bitmap(msg: PanelFrameMsg) -> np.ndarray | None:
    """Unpack a frame message payload back into an RGBA array."""
    if msg.off_viewport:
        return None
    if msg.format == FORMAT_RAW:
        flat = np.frombuffer(msg.payload, dtype=np.uint8)
        return flat.reshape(msg.h, msg.w, 4).copy()
    from PIL import Image

    img = Image.open(io.BytesIO(msg.payload)).convert("RGBA")
    return np.asarray(img, dtype=np.uint8).copy()


def frame_crop_rect(msg: PanelFrameMsg) -> FrameRect | None:
    if msg.off_viewport:
        return None
    return FrameRect(msg.x, msg.y, msg.w, msg.h)
