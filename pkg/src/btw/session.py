"""Session logic tying a resolved layout to one live page.

A session owns the input pipeline (panel-local point -> document ->
viewport -> injection, auto-scrolling when the target is outside the
viewport), panel workspace state (pose, snap, input mode), and the
decompose cache. Transport fan-out lives in :mod:`btw.server`; the replay
harness drives a session directly, so nothing here touches sockets.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

from .bridge.base import BrowserBridge, PageHandle, SourceFrame
from .decompose import DeltaCache, PanelFrame, ResolvedLayout, ResolvedPanel, decompose_frame
from .errors import InjectionRejectedError
from .geometry import (
    UnitPoint,
    ViewportPoint,
    doc_to_viewport,
    panel_local_to_doc,
    round_half_away,
)
from .layouts import Anchoring
from .policy import (
    TOUCH,
    PanelPose,
    PolicyConfig,
    distance_to_user,
    input_mode,
    placement_from_hint,
    snap_pose,
)
from .protocol import (
    ERR_BAD_SEQ,
    ERR_OUT_OF_VIEWPORT,
    ERR_UNKNOWN_PANEL,
    AnnouncedPanel,
    ErrorMsg,
    InputEventMsg,
    LayoutAnnounce,
    PanelStateMsg,
    PanelTransformMsg,
)

# Lateral spacing between panels whose hints land on the same anchor.
_SPREAD_STEP = 0.3


@dataclass
class PanelRuntime:
    pose: PanelPose
    anchored: bool
    input_mode: str


@dataclass(frozen=True)
class InjectionOutcome:
    """What handle_input did: injected (where), or why not."""

    ok: bool
    error: ErrorMsg | None = None
    injected_at: tuple[int, int] | None = None
    scrolled: bool = False


class Session:
    """One mirrored page with its panels, clients, and input pipeline."""

    def __init__(
        self,
        bridge: BrowserBridge,
        handle: PageHandle,
        layout: ResolvedLayout,
        policy: PolicyConfig | None = None,
        auto_scroll: bool = True,
    ):
        self.bridge = bridge
        self.handle = handle
        self.layout = layout
        self.policy = policy or PolicyConfig()
        self.auto_scroll = auto_scroll
        self.cache = DeltaCache()
        self.latency_ms: list[float] = []
        self._lock = threading.RLock()
        self._client_seq: dict[str, int] = {}
        self._last_frames: dict[str, PanelFrame] = {}
        self._states: dict[str, PanelRuntime] = self._initial_states()

    # -- initial placement -------------------------------------------------

    def _initial_states(self) -> dict[str, PanelRuntime]:
        states: dict[str, PanelRuntime] = {}
        anchor_use: dict[tuple, int] = {}
        for panel in self.layout.panels:
            pose = placement_from_hint(panel.placement, self.policy)
            key = (panel.placement.zone, panel.placement.distance)
            nth = anchor_use.get(key, 0)
            anchor_use[key] = nth + 1
            if nth:
                x, y, z = pose.position
                pose = PanelPose(position=(x + _SPREAD_STEP * nth, y, z), orientation=pose.orientation, size=pose.size)
            pose, anchored = snap_pose(pose, self.policy.surfaces, self.policy)
            mode = input_mode(distance_to_user(pose, self.policy), TOUCH, self.policy)
            states[panel.panel_id] = PanelRuntime(pose=pose, anchored=anchored, input_mode=mode)
        return states

    def announce(self, url: str = "") -> LayoutAnnounce:
        with self._lock:
            panels = tuple(
                AnnouncedPanel(
                    panel_id=p.panel_id,
                    display_name=p.display_name,
                    role=p.role.value,
                    region=p.region,
                    anchoring=p.anchoring.value,
                    zone=p.placement.zone.value,
                    distance=p.placement.distance.value,
                    scale=p.placement.scale,
                    interaction=p.interaction.value,
                    pose=self._states[p.panel_id].pose,
                    anchored=self._states[p.panel_id].anchored,
                    input_mode=self._states[p.panel_id].input_mode,
                )
                for p in self.layout.panels
            )
            return LayoutAnnounce(layout_name=self.layout.name, url=url or self.handle.url, panels=panels)

    # -- frames --------------------------------------------------------------

    def process_frame(self, frame: SourceFrame) -> list[PanelFrame]:
        with self._lock:
            emitted = decompose_frame(frame, self.layout, self.cache)
            for pf in emitted:
                self._last_frames[pf.panel_id] = pf
            return emitted

    def last_frames(self) -> list[PanelFrame]:
        """Most recent emission per panel, for greeting late joiners."""
        with self._lock:
            return [self._last_frames[p] for p in self.layout.panel_ids if p in self._last_frames]

    # -- input relay -----------------------------------------------------------

    def handle_input(self, event: InputEventMsg, client_id: str = "local") -> InjectionOutcome:
        received = time.perf_counter()
        with self._lock:
            err = self._check_seq(client_id, event.client_seq)
            if err is not None:
                return InjectionOutcome(ok=False, error=err)
            panel = self.layout.panel(event.panel_id)
            if panel is None:
                return InjectionOutcome(
                    ok=False, error=ErrorMsg(ERR_UNKNOWN_PANEL, f"no panel {event.panel_id!r}")
                )

            if event.kind == "key":
                self.bridge.inject_key(self.handle, event.key, event.text)
                self.latency_ms.append((time.perf_counter() - received) * 1000.0)
                return InjectionOutcome(ok=True)

            outcome = self._inject_pointer_like(panel, event)
            if outcome.ok:
                self.latency_ms.append((time.perf_counter() - received) * 1000.0)
            return outcome

    def _inject_pointer_like(self, panel: ResolvedPanel, event: InputEventMsg) -> InjectionOutcome:
        point = UnitPoint(event.u, event.v)
        scrolled = False

        if panel.anchoring is Anchoring.VIEWPORT:
            # Fixed elements sit at the same viewport spot at any scroll.
            vp = ViewportPoint(
                panel.region.x + point.u * panel.region.w,
                panel.region.y + point.v * panel.region.h,
            )
            metrics = self.bridge.query_metrics(self.handle)
            visible = 0 <= vp.x <= metrics.viewport_w and 0 <= vp.y <= metrics.viewport_h
        else:
            doc = panel_local_to_doc(point, panel.region)
            metrics = self.bridge.query_metrics(self.handle)
            vp, visible = doc_to_viewport(doc, metrics)
            if not visible and self.auto_scroll:
                metrics = self.bridge.scroll_to(
                    self.handle,
                    doc.x - metrics.viewport_w / 2,
                    doc.y - metrics.viewport_h / 2,
                )
                scrolled = True
                vp, visible = doc_to_viewport(doc, metrics)

        if not visible:
            return InjectionOutcome(
                ok=False,
                error=ErrorMsg(ERR_OUT_OF_VIEWPORT, f"target ({vp.x:.1f}, {vp.y:.1f}) not in viewport"),
                scrolled=scrolled,
            )

        target = ViewportPoint(round_half_away(vp.x), round_half_away(vp.y))
        try:
            if event.kind == "wheel":
                self.bridge.inject_wheel(self.handle, target, event.delta_x, event.delta_y)
            else:
                self.bridge.inject_pointer(self.handle, event.kind, target, event.button, event.modifiers)
        except InjectionRejectedError as exc:
            return InjectionOutcome(ok=False, error=ErrorMsg(ERR_OUT_OF_VIEWPORT, str(exc)), scrolled=scrolled)
        return InjectionOutcome(ok=True, injected_at=(int(target.x), int(target.y)), scrolled=scrolled)

    def _check_seq(self, client_id: str, seq: int) -> ErrorMsg | None:
        last = self._client_seq.get(client_id)
        if last is not None and seq <= last:
            return ErrorMsg(ERR_BAD_SEQ, f"client_seq {seq} not greater than {last}")
        self._client_seq[client_id] = seq
        return None

    # -- panel transforms ------------------------------------------------------

    def handle_panel_transform(self, msg: PanelTransformMsg, client_id: str = "local") -> PanelStateMsg | ErrorMsg:
        with self._lock:
            err = self._check_seq(client_id, msg.client_seq)
            if err is not None:
                return err
            state = self._states.get(msg.panel_id)
            if state is None:
                return ErrorMsg(ERR_UNKNOWN_PANEL, f"no panel {msg.panel_id!r}")
            pose, anchored = snap_pose(msg.pose, self.policy.surfaces, self.policy)
            mode = input_mode(distance_to_user(pose, self.policy), state.input_mode, self.policy)
            state.pose = pose
            state.anchored = anchored
            state.input_mode = mode
            return PanelStateMsg(panel_id=msg.panel_id, pose=pose, anchored=anchored, input_mode=mode)

    def panel_state(self, panel_id: str) -> PanelRuntime | None:
        with self._lock:
            return self._states.get(panel_id)

    def latency_stats(self) -> tuple[float, float, float] | None:
        """(min, median, max) input-receipt-to-injection latency in ms."""
        with self._lock:
            if not self.latency_ms:
                return None
            ordered = sorted(self.latency_ms)
            return ordered[0], ordered[len(ordered) // 2], ordered[-1]
