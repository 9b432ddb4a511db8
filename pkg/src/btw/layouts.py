"""Layout documents: parsing, validation, persistence, and site matching.

A layout document names a site pattern and decomposes matching pages into
panels. Each panel carries a functional role, a region (CSS selector or an
absolute document-space rect), an anchoring mode, and a placement hint the
workspace uses for its initial pose.

Documents are UTF-8 JSON files with extension ``.btwlayout``; the three
built-in presets are embedded here.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from enum import Enum
from fnmatch import fnmatchcase
from pathlib import Path

from .errors import LayoutError
from .geometry import RegionRect

LAYOUT_EXTENSION = ".btwlayout"

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")


class Role(str, Enum):
    PRIMARY_CONTENT = "primary-content"
    CONTROL = "control"
    CONTEXT = "context"
    PERIPHERAL = "peripheral"


class Zone(str, Enum):
    SURFACE = "surface"
    MIDAIR_CENTER = "midair-center"
    MIDAIR_SIDE = "midair-side"
    PERIPHERAL = "peripheral"


class Distance(str, Enum):
    NEAR = "near"
    MID = "mid"
    FAR = "far"


class Anchoring(str, Enum):
    DOCUMENT = "document"
    VIEWPORT = "viewport"


class Interaction(str, Enum):
    TOUCH = "touch"
    RAY = "ray"
    AUTO = "auto"


@dataclass(frozen=True)
class PlacementHint:
    """Where a panel should initially live in the workspace."""

    zone: Zone = Zone.MIDAIR_CENTER
    distance: Distance = Distance.MID
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise LayoutError("scale must be > 0", "placement.scale")


@dataclass(frozen=True)
class PanelSpec:
    """One panel of a layout: identity, region, and placement."""

    id: str
    display_name: str
    role: Role
    selector: str | None = None
    rect: RegionRect | None = None
    fallback_rect: RegionRect | None = None
    anchoring: Anchoring = Anchoring.DOCUMENT
    placement: PlacementHint = PlacementHint()
    interaction: Interaction = Interaction.AUTO


@dataclass(frozen=True)
class LayoutDocument:
    name: str
    site_pattern: str
    panels: tuple[PanelSpec, ...]


# -- parse / serialize ----------------------------------------------------


def _expect(cond: bool, message: str, path: str) -> None:
    if not cond:
        raise LayoutError(message, path)


def _str_field(obj: dict, key: str, path: str, required: bool = True, default: str = "") -> str:
    if key not in obj:
        _expect(not required, f"missing required field '{key}'", path)
        return default
    value = obj[key]
    _expect(isinstance(value, str), "expected a string", f"{path}.{key}")
    return value


def _enum_field(obj: dict, key: str, enum_cls, path: str, default=None):
    if key not in obj:
        _expect(default is not None, f"missing required field '{key}'", path)
        return default
    value = obj[key]
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise LayoutError(f"unknown value {value!r}, expected one of: {allowed}", f"{path}.{key}") from None


def _rect_from(obj, path: str) -> RegionRect:
    _expect(isinstance(obj, dict), "expected an object {x, y, w, h}", path)
    for key in ("x", "y", "w", "h"):
        _expect(key in obj, f"missing rect field '{key}'", path)
        _expect(isinstance(obj[key], (int, float)) and not isinstance(obj[key], bool), "expected a number", f"{path}.{key}")
    try:
        return RegionRect(float(obj["x"]), float(obj["y"]), float(obj["w"]), float(obj["h"]))
    except Exception as exc:
        raise LayoutError(str(exc), path) from None


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    for key in obj:
        _expect(key in allowed, f"unknown field '{key}'", f"{path}.{key}")


_PANEL_KEYS = {"id", "display_name", "role", "selector", "rect", "fallback_rect", "anchoring", "placement", "interaction"}
_PLACEMENT_KEYS = {"zone", "distance", "scale"}
_DOC_KEYS = {"name", "site_pattern", "panels"}


def _panel_from(obj, path: str) -> PanelSpec:
    _expect(isinstance(obj, dict), "expected a panel object", path)
    _check_keys(obj, _PANEL_KEYS, path)

    panel_id = _str_field(obj, "id", path)
    _expect(bool(_ID_RE.match(panel_id)), f"invalid panel id {panel_id!r}", f"{path}.id")

    has_selector = "selector" in obj and obj["selector"] is not None
    has_rect = "rect" in obj and obj["rect"] is not None
    _expect(has_selector != has_rect, "exactly one of 'selector' or 'rect' is required", path)

    selector = None
    rect = None
    if has_selector:
        selector = obj["selector"]
        _expect(isinstance(selector, str) and selector != "", "expected a non-empty string", f"{path}.selector")
    else:
        rect = _rect_from(obj["rect"], f"{path}.rect")

    fallback = None
    if obj.get("fallback_rect") is not None:
        _expect(has_selector, "fallback_rect only applies to selector regions", f"{path}.fallback_rect")
        fallback = _rect_from(obj["fallback_rect"], f"{path}.fallback_rect")

    placement = PlacementHint()
    if "placement" in obj:
        p = obj["placement"]
        _expect(isinstance(p, dict), "expected a placement object", f"{path}.placement")
        _check_keys(p, _PLACEMENT_KEYS, f"{path}.placement")
        scale = p.get("scale", 1.0)
        _expect(
            isinstance(scale, (int, float)) and not isinstance(scale, bool) and scale > 0,
            "scale must be a positive number",
            f"{path}.placement.scale",
        )
        placement = PlacementHint(
            zone=_enum_field(p, "zone", Zone, f"{path}.placement", Zone.MIDAIR_CENTER),
            distance=_enum_field(p, "distance", Distance, f"{path}.placement", Distance.MID),
            scale=float(scale),
        )

    return PanelSpec(
        id=panel_id,
        display_name=_str_field(obj, "display_name", path, required=False, default=panel_id),
        role=_enum_field(obj, "role", Role, path),
        selector=selector,
        rect=rect,
        fallback_rect=fallback,
        anchoring=_enum_field(obj, "anchoring", Anchoring, path, Anchoring.DOCUMENT),
        placement=placement,
        interaction=_enum_field(obj, "interaction", Interaction, path, Interaction.AUTO),
    )


def layout_from_dict(obj) -> LayoutDocument:
    _expect(isinstance(obj, dict), "layout document must be a JSON object", "$")
    _check_keys(obj, _DOC_KEYS, "$")
    name = _str_field(obj, "name", "$")
    _expect(name != "", "name must be non-empty", "$.name")
    site_pattern = _str_field(obj, "site_pattern", "$")
    panels_raw = obj.get("panels")
    _expect(isinstance(panels_raw, list) and len(panels_raw) > 0, "panels must be a non-empty list", "$.panels")

    panels = []
    seen: set[str] = set()
    for i, panel_obj in enumerate(panels_raw):
        panel = _panel_from(panel_obj, f"panels[{i}]")
        _expect(panel.id not in seen, f"duplicate panel id {panel.id!r}", f"panels[{i}].id")
        seen.add(panel.id)
        panels.append(panel)
    return LayoutDocument(name=name, site_pattern=site_pattern, panels=tuple(panels))


def parse_layout(text: str) -> LayoutDocument:
    """Parse and validate a layout document from JSON text."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LayoutError(f"not valid JSON: {exc}", "$") from None
    return layout_from_dict(obj)


def _rect_to_dict(r: RegionRect) -> dict:
    return {"x": r.x, "y": r.y, "w": r.w, "h": r.h}


def layout_to_dict(doc: LayoutDocument) -> dict:
    panels = []
    for p in doc.panels:
        entry: dict = {
            "id": p.id,
            "display_name": p.display_name,
            "role": p.role.value,
        }
        if p.selector is not None:
            entry["selector"] = p.selector
        else:
            entry["rect"] = _rect_to_dict(p.rect)
        if p.fallback_rect is not None:
            entry["fallback_rect"] = _rect_to_dict(p.fallback_rect)
        entry["anchoring"] = p.anchoring.value
        entry["placement"] = {
            "zone": p.placement.zone.value,
            "distance": p.placement.distance.value,
            "scale": p.placement.scale,
        }
        entry["interaction"] = p.interaction.value
        panels.append(entry)
    return {"name": doc.name, "site_pattern": doc.site_pattern, "panels": panels}


def serialize_layout(doc: LayoutDocument) -> str:
    """Canonical serialization: explicit fields, sorted keys, 2-space indent."""
    return json.dumps(layout_to_dict(doc), sort_keys=True, indent=2) + "\n"


# -- built-in presets -------------------------------------------------------


def builtin_presets() -> list[LayoutDocument]:
    """The three shipped site presets.

    Selectors are best-effort for the live sites and may rot; each panel
    carries an absolute-rect fallback. The mock page declares matching
    anchors for all of them.
    """
    maps = LayoutDocument(
        name="maps",
        site_pattern="*google.com/maps*",
        panels=(
            PanelSpec(
                id="map-canvas",
                display_name="Map",
                role=Role.PRIMARY_CONTENT,
                selector="#map",
                fallback_rect=RegionRect(400, 160, 1600, 1560),
                placement=PlacementHint(Zone.SURFACE, Distance.NEAR),
            ),
            PanelSpec(
                id="info-panel",
                display_name="Place info",
                role=Role.CONTEXT,
                selector="#pane",
                fallback_rect=RegionRect(0, 160, 400, 1400),
                placement=PlacementHint(Zone.MIDAIR_SIDE, Distance.MID),
            ),
            PanelSpec(
                id="controls",
                display_name="Map controls",
                role=Role.CONTROL,
                selector="#map-controls",
                fallback_rect=RegionRect(1500, 1760, 420, 120),
                placement=PlacementHint(Zone.SURFACE, Distance.NEAR),
            ),
        ),
    )
    slides = LayoutDocument(
        name="slides",
        site_pattern="*docs.google.com/presentation*",
        panels=(
            PanelSpec(
                id="slide-canvas",
                display_name="Slide",
                role=Role.PRIMARY_CONTENT,
                selector="#workspace",
                fallback_rect=RegionRect(200, 160, 1400, 900),
                placement=PlacementHint(Zone.MIDAIR_CENTER, Distance.MID),
            ),
            PanelSpec(
                id="thumbnails",
                display_name="Thumbnails",
                role=Role.CONTEXT,
                selector="#filmstrip",
                fallback_rect=RegionRect(0, 160, 200, 1240),
                placement=PlacementHint(Zone.MIDAIR_SIDE, Distance.MID),
            ),
            PanelSpec(
                id="toolbar",
                display_name="Toolbar",
                role=Role.CONTROL,
                selector="#toolbar",
                fallback_rect=RegionRect(0, 120, 2000, 40),
                anchoring=Anchoring.VIEWPORT,
                placement=PlacementHint(Zone.SURFACE, Distance.NEAR),
            ),
        ),
    )
    youtube = LayoutDocument(
        name="youtube",
        site_pattern="*youtube.com/watch*",
        panels=(
            PanelSpec(
                id="player",
                display_name="Player",
                role=Role.PRIMARY_CONTENT,
                selector="#movie_player",
                fallback_rect=RegionRect(40, 140, 860, 480),
                placement=PlacementHint(Zone.MIDAIR_CENTER, Distance.MID),
            ),
            PanelSpec(
                id="controls",
                display_name="Playback controls",
                role=Role.CONTROL,
                selector=".ytp-chrome-bottom",
                fallback_rect=RegionRect(40, 620, 860, 48),
                placement=PlacementHint(Zone.SURFACE, Distance.NEAR),
            ),
            PanelSpec(
                id="comments",
                display_name="Comments",
                role=Role.CONTEXT,
                selector="#comments",
                fallback_rect=RegionRect(40, 700, 860, 1200),
                placement=PlacementHint(Zone.MIDAIR_SIDE, Distance.MID),
            ),
            PanelSpec(
                id="recommendations",
                display_name="Up next",
                role=Role.PERIPHERAL,
                selector="#related",
                fallback_rect=RegionRect(940, 140, 460, 800),
                placement=PlacementHint(Zone.PERIPHERAL, Distance.FAR),
            ),
        ),
    )
    return [maps, slides, youtube]


def fallback_layout(metrics_w: float = 1280, metrics_h: float = 800) -> LayoutDocument:
    """Single full-viewport panel for unmatched sites (classic window)."""
    return LayoutDocument(
        name="fallback",
        site_pattern="*",
        panels=(
            PanelSpec(
                id="page",
                display_name="Page",
                role=Role.PRIMARY_CONTENT,
                rect=RegionRect(0, 0, metrics_w, metrics_h),
                anchoring=Anchoring.VIEWPORT,
                placement=PlacementHint(Zone.MIDAIR_CENTER, Distance.MID),
            ),
        ),
    )


# -- store -------------------------------------------------------------------


def _literal_len(pattern: str) -> int:
    return len(re.sub(r"[*?]", "", pattern))


class LayoutStore:
    """Read-mostly collection of layout documents.

    Built-ins are present from construction; documents loaded later (or
    added programmatically) shadow built-ins with the same name.
    """

    def __init__(self, include_builtins: bool = True):
        self._lock = threading.RLock()
        self._docs: dict[str, LayoutDocument] = {}
        if include_builtins:
            for doc in builtin_presets():
                self._docs[doc.name] = doc

    def add(self, doc: LayoutDocument) -> None:
        with self._lock:
            self._docs[doc.name] = doc

    def get(self, name: str) -> LayoutDocument | None:
        with self._lock:
            return self._docs.get(name)

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._docs)

    def documents(self) -> list[LayoutDocument]:
        with self._lock:
            return [self._docs[name] for name in sorted(self._docs)]

    def load_directory(self, directory: str | Path) -> int:
        """Load every ``*.btwlayout`` file under ``directory`` (non-recursive)."""
        count = 0
        for path in sorted(Path(directory).glob(f"*{LAYOUT_EXTENSION}")):
            self.add(parse_layout(path.read_text(encoding="utf-8")))
            count += 1
        return count

    def match(self, url: str) -> LayoutDocument | None:
        """Best layout for ``url`` by site pattern, or None.

        Ties break on longest literal pattern, then lexicographic name, so
        the result is independent of insertion order.
        """
        with self._lock:
            candidates = [d for d in self._docs.values() if fnmatchcase(url, d.site_pattern)]
        if not candidates:
            return None
        candidates.sort(key=lambda d: (-_literal_len(d.site_pattern), d.name))
        return candidates[0]


def match_layout(url: str, store: LayoutStore) -> LayoutDocument | None:
    return store.match(url)
