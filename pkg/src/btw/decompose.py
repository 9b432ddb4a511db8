"""Turn captured source frames into per-panel crops.

Regions anchored to the document track scroll (their crop window moves
through the frame); regions anchored to the viewport are cut at a fixed
frame position regardless of scroll. Panels whose cropped bytes are
unchanged since their last emission are suppressed, and regions entirely
outside the current frame yield an ``off_viewport`` marker instead of
pixels.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .bridge.base import Bitmap, BrowserBridge, PageHandle, SourceFrame
from .errors import InternalError, LayoutError, ResolutionError, SelectorNotFoundError
from .geometry import FrameRect, RegionRect, ViewportMetrics, crop_rect_in_frame
from .layouts import Anchoring, Interaction, LayoutDocument, PlacementHint, Role

_OFF_VIEWPORT_DIGEST = b"\x00off-viewport"


@dataclass(frozen=True)
class ResolvedPanel:
    """One layout panel with its region pinned down to a concrete rect."""

    panel_id: str
    display_name: str
    region: RegionRect
    anchoring: Anchoring
    role: Role
    placement: PlacementHint
    interaction: Interaction


@dataclass(frozen=True)
class ResolvedLayout:
    name: str
    panels: tuple[ResolvedPanel, ...]

    def panel(self, panel_id: str) -> ResolvedPanel | None:
        for p in self.panels:
            if p.panel_id == panel_id:
                return p
        return None

    @property
    def panel_ids(self) -> tuple[str, ...]:
        return tuple(p.panel_id for p in self.panels)


@dataclass(frozen=True)
class PanelFrame:
    """A crop of one source frame bound to a panel.

    ``off_viewport`` frames carry no bitmap; otherwise bitmap dimensions
    equal the crop dimensions exactly.
    """

    panel_id: str
    source_seq: int
    bitmap: Bitmap | None
    crop: FrameRect | None
    off_viewport: bool = False

    def __post_init__(self) -> None:
        if self.off_viewport:
            if self.bitmap is not None or self.crop is not None:
                raise InternalError("off-viewport frame must carry no pixels")
        else:
            if self.bitmap is None or self.crop is None:
                raise InternalError("on-viewport frame requires bitmap and crop")
            h, w = self.bitmap.shape[:2]
            if (w, h) != (self.crop.w, self.crop.h):
                raise InternalError(
                    f"bitmap {w}x{h} does not match crop {self.crop.w}x{self.crop.h}"
                )


def resolve_layout(doc: LayoutDocument, bridge: BrowserBridge, handle: PageHandle) -> ResolvedLayout:
    """Resolve every panel's region to a document-space rect.

    Selector regions are resolved through the bridge, falling back to the
    panel's absolute rect when the selector matches nothing. Absolute-rect
    regions pass through without touching the bridge.
    """
    panels = []
    seen: set[str] = set()
    for spec in doc.panels:
        if spec.id in seen:
            raise LayoutError(f"duplicate panel id {spec.id!r}", "panels")
        seen.add(spec.id)

        if spec.rect is not None:
            region = spec.rect
        else:
            try:
                region = bridge.resolve_selector(handle, spec.selector)
            except SelectorNotFoundError as exc:
                if spec.fallback_rect is not None:
                    region = spec.fallback_rect
                else:
                    raise ResolutionError(spec.id, str(exc)) from exc
        panels.append(
            ResolvedPanel(
                panel_id=spec.id,
                display_name=spec.display_name,
                region=region,
                anchoring=spec.anchoring,
                role=spec.role,
                placement=spec.placement,
                interaction=spec.interaction,
            )
        )
    return ResolvedLayout(name=doc.name, panels=tuple(panels))


def crop_bitmap(src: Bitmap, rect: FrameRect) -> Bitmap:
    """Bit-exact subrectangle copy; ``rect`` must be pre-clipped to bounds."""
    h, w = src.shape[:2]
    if rect.x + rect.w > w or rect.y + rect.h > h:
        raise InternalError(f"crop {rect} exceeds {w}x{h} frame; caller must pre-clip")
    return src[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w].copy()


def content_digest(bitmap: Bitmap, crop: FrameRect) -> bytes:
    """Digest of a crop's bytes and geometry, used for delta suppression."""
    digest = hashlib.blake2b(digest_size=16)
    digest.update(f"{crop.x},{crop.y},{crop.w},{crop.h};".encode())
    digest.update(bitmap.tobytes())
    return digest.digest()


class DeltaCache:
    """Per-session memory of each panel's last emitted content digest."""

    def __init__(self) -> None:
        self._last: dict[str, bytes] = {}

    def should_emit(self, panel_id: str, digest: bytes) -> bool:
        if self._last.get(panel_id) == digest:
            return False
        self._last[panel_id] = digest
        return True

    def last_digest(self, panel_id: str) -> bytes | None:
        return self._last.get(panel_id)

    def reset(self) -> None:
        self._last.clear()


def _panel_crop(panel: ResolvedPanel, metrics: ViewportMetrics) -> FrameRect | None:
    if panel.anchoring is Anchoring.VIEWPORT:
        # Viewport-relative rect: same frame window at every scroll offset.
        metrics = dataclasses.replace(metrics, scroll_x=0.0, scroll_y=0.0)
    return crop_rect_in_frame(panel.region, metrics)


def decompose_frame(frame: SourceFrame, layout: ResolvedLayout, cache: DeltaCache) -> list[PanelFrame]:
    """Crop one source frame into panel frames, suppressing unchanged panels.

    Every emitted frame carries the source frame's seq, which is what keeps
    panels of one page mutually consistent downstream.
    """
    out: list[PanelFrame] = []
    for panel in layout.panels:
        crop = _panel_crop(panel, frame.metrics)
        if crop is None:
            if cache.should_emit(panel.panel_id, _OFF_VIEWPORT_DIGEST):
                out.append(
                    PanelFrame(
                        panel_id=panel.panel_id,
                        source_seq=frame.seq,
                        bitmap=None,
                        crop=None,
                        off_viewport=True,
                    )
                )
            continue
        bitmap = crop_bitmap(frame.bitmap, crop)
        digest = content_digest(bitmap, crop)
        if cache.should_emit(panel.panel_id, digest):
            out.append(
                PanelFrame(panel_id=panel.panel_id, source_seq=frame.seq, bitmap=bitmap, crop=crop)
            )
    return out
