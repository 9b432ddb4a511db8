"""Server configuration with layered sources.

Precedence, lowest first: built-in defaults, ``BTW_*`` environment
variables, the config file, command-line flags. Environment variables
never override a config file or a flag.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import InvalidInputError
from .layouts import Distance, Zone
from .policy import PolicyConfig, SurfacePlane

ENV_PREFIX = "BTW_"

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


@dataclass
class ServerConfig:
    url: str = "mock://grid"
    bridge: str = "mock"  # mock | devtools
    devtools_endpoint: str = ""
    host: str = "127.0.0.1"
    port: int = 7420
    layout_dir: str = ""
    layout: str = ""  # explicit layout name; empty -> match by URL, else fallback
    token: str = ""
    max_fps: int = 15
    auto_scroll: bool = True
    frame_format: str = "raw"  # raw | png
    policy: PolicyConfig = field(default_factory=PolicyConfig)

    def validate(self) -> None:
        if self.bridge not in ("mock", "devtools"):
            raise InvalidInputError(f"bridge must be 'mock' or 'devtools', got {self.bridge!r}")
        if self.bridge == "devtools" and not self.devtools_endpoint:
            raise InvalidInputError("--bridge devtools requires a devtools endpoint")
        if self.frame_format not in ("raw", "png"):
            raise InvalidInputError(f"frame_format must be 'raw' or 'png', got {self.frame_format!r}")
        if self.max_fps <= 0:
            raise InvalidInputError("max_fps must be positive")
        if not (0 <= self.port <= 65535):
            raise InvalidInputError(f"port out of range: {self.port}")


def policy_to_dict(policy: PolicyConfig) -> dict:
    return {
        "d_touch": policy.d_touch,
        "d_ray": policy.d_ray,
        "snap_threshold": policy.snap_threshold,
        "user_reference": list(policy.user_reference),
        "surfaces": [
            {"origin": list(s.origin), "normal": list(s.normal), "extent": list(s.extent)}
            for s in policy.surfaces
        ],
        "zone_anchors": {
            f"{zone.value}/{distance.value}": {
                "position": list(position),
                "orientation": list(orientation),
                "size": list(size),
            }
            for (zone, distance), (position, orientation, size) in sorted(
                policy.zone_anchors.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
            )
        },
    }


def policy_from_dict(obj: dict) -> PolicyConfig:
    base = PolicyConfig()
    anchors = dict(base.zone_anchors)
    if "zone_anchors" in obj:
        for key, entry in obj["zone_anchors"].items():
            zone_s, _, distance_s = key.partition("/")
            anchors[(Zone(zone_s), Distance(distance_s))] = (
                tuple(entry["position"]),
                tuple(entry["orientation"]),
                tuple(entry["size"]),
            )
    surfaces = base.surfaces
    if "surfaces" in obj:
        surfaces = tuple(
            SurfacePlane(origin=tuple(s["origin"]), normal=tuple(s["normal"]), extent=tuple(s["extent"]))
            for s in obj["surfaces"]
        )
    return PolicyConfig(
        d_touch=float(obj.get("d_touch", base.d_touch)),
        d_ray=float(obj.get("d_ray", base.d_ray)),
        snap_threshold=float(obj.get("snap_threshold", base.snap_threshold)),
        user_reference=tuple(obj.get("user_reference", base.user_reference)),
        surfaces=surfaces,
        zone_anchors=anchors,
    )


_SIMPLE_FIELDS = {
    "url": str,
    "bridge": str,
    "devtools_endpoint": str,
    "host": str,
    "port": int,
    "layout_dir": str,
    "layout": str,
    "token": str,
    "max_fps": int,
    "auto_scroll": bool,
    "frame_format": str,
}


def _coerce(name: str, kind: type, value):
    if kind is bool:
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in _BOOL_TRUE:
            return True
        if text in _BOOL_FALSE:
            return False
        raise InvalidInputError(f"{name}: expected a boolean, got {value!r}")
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: {exc}") from None


def _apply(config: ServerConfig, values: Mapping) -> None:
    for name, value in values.items():
        if value is None:
            continue
        if name == "policy":
            config.policy = policy_from_dict(value) if isinstance(value, dict) else value
            continue
        kind = _SIMPLE_FIELDS.get(name)
        if kind is None:
            raise InvalidInputError(f"unknown config key {name!r}")
        setattr(config, name, _coerce(name, kind, value))


def load_config(
    env: Mapping[str, str] | None = None,
    config_path: str | Path | None = None,
    flags: Mapping | None = None,
) -> ServerConfig:
    """Build a ServerConfig from defaults, env, file, and flags in order."""
    config = ServerConfig()

    if env:
        env_values = {}
        for name in _SIMPLE_FIELDS:
            raw = env.get(ENV_PREFIX + name.upper())
            if raw is not None:
                env_values[name] = raw
        _apply(config, env_values)

    if config_path:
        try:
            obj = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"config file {config_path}: {exc}") from None
        if not isinstance(obj, dict):
            raise InvalidInputError(f"config file {config_path}: expected a JSON object")
        _apply(config, obj)

    if flags:
        _apply(config, flags)

    config.validate()
    return config


def config_to_dict(config: ServerConfig) -> dict:
    out = {name: getattr(config, name) for name in _SIMPLE_FIELDS}
    out["policy"] = policy_to_dict(config.policy)
    return out


def dump_config(config: ServerConfig) -> str:
    return json.dumps(config_to_dict(config), sort_keys=True, indent=2) + "\n"


def replace(config: ServerConfig, **kwargs) -> ServerConfig:
    return dataclasses.replace(config, **kwargs)
