"""Scripted end-to-end verification against the mock bridge.

A replay script is a timed list of inputs, panel transforms, scrolls, and
expectations, executed against an in-process session. Time is virtual:
``at_ms`` drives a simulated clock that also paces frame capture, so a
60-second scenario runs in milliseconds and two runs of the same script
produce byte-identical canonical reports.

Scripts are JSON files with extension ``.btwscript``. At equal timestamps
script steps execute before the frame tick.
"""

from __future__ import annotations

import hashlib
import json
import statistics
from dataclasses import dataclass, field

from .bridge.mock import MockBridge
from .decompose import resolve_layout
from .errors import LayoutError, ReplayScriptError
from .layouts import LayoutStore
from .policy import PanelPose
from .protocol import EVENT_KINDS, InputEventMsg, PanelTransformMsg
from .session import Session

SCRIPT_EXTENSION = ".btwscript"

_CHECKS = ("injected", "mode", "anchored", "sync", "emitted")


@dataclass(frozen=True)
class ScriptStep:
    at_ms: float
    action: str  # input | transform | scroll | expect
    fields: dict


@dataclass(frozen=True)
class ReplayScript:
    layout: str
    url: str
    max_fps: int
    duration_ms: float
    steps: tuple[ScriptStep, ...]


@dataclass(frozen=True)
class AssertionResult:
    step_index: int
    at_ms: float
    description: str
    passed: bool
    detail: str = ""


@dataclass
class ReplayReport:
    layout: str
    duration_ms: float
    assertions: list[AssertionResult] = field(default_factory=list)
    injection_count: int = 0
    injection_digest: str = ""
    panel_seq_trace: dict[str, list[int]] = field(default_factory=dict)
    batches: int = 0
    frames_captured: int = 0
    frames_emitted: int = 0
    latency_ms: tuple[float, float, float] | None = None

    @property
    def failures(self) -> int:
        return sum(1 for a in self.assertions if not a.passed)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def canonical_text(self) -> str:
        """Deterministic report body; wall-clock timing deliberately excluded."""
        lines = [f"REPLAY layout={self.layout} duration_ms={self.duration_ms:g}"]
        for a in self.assertions:
            status = "PASS" if a.passed else "FAIL"
            line = f"ASSERT step={a.step_index} at={a.at_ms:g} {a.description} {status}"
            if a.detail and not a.passed:
                line += f" ({a.detail})"
            lines.append(line)
        lines.append(f"INJECTIONS count={self.injection_count} digest={self.injection_digest}")
        for panel_id in sorted(self.panel_seq_trace):
            seqs = self.panel_seq_trace[panel_id]
            digest = hashlib.blake2b(",".join(map(str, seqs)).encode(), digest_size=8).hexdigest()
            last = seqs[-1] if seqs else 0
            lines.append(f"PANEL {panel_id} delivered={len(seqs)} last_seq={last} trace={digest}")
        lines.append(
            f"FRAMES captured={self.frames_captured} batches={self.batches} emitted={self.frames_emitted}"
        )
        lines.append(f"RESULT pass={len(self.assertions) - self.failures} fail={self.failures}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        text = self.canonical_text()
        if self.latency_ms is not None:
            lo, med, hi = self.latency_ms
            text += f"TIMING latency_ms min={lo:.3f} median={med:.3f} max={hi:.3f}\n"
        return text


# -- script parsing -----------------------------------------------------------


def _expect(cond: bool, message: str, path: str) -> None:
    if not cond:
        raise ReplayScriptError(f"{path}: {message}")


def parse_script(text: str) -> ReplayScript:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReplayScriptError(f"$: not valid JSON: {exc}") from None
    _expect(isinstance(obj, dict), "script must be a JSON object", "$")
    layout = obj.get("layout")
    _expect(isinstance(layout, str) and layout != "", "layout name required", "$.layout")
    url = obj.get("url", "mock://grid")
    _expect(isinstance(url, str), "url must be a string", "$.url")
    max_fps = obj.get("max_fps", 15)
    _expect(isinstance(max_fps, int) and max_fps > 0, "max_fps must be a positive integer", "$.max_fps")

    steps_raw = obj.get("steps", [])
    _expect(isinstance(steps_raw, list), "steps must be a list", "$.steps")
    steps: list[ScriptStep] = []
    prev_at = 0.0
    for i, raw in enumerate(steps_raw):
        path = f"steps[{i}]"
        _expect(isinstance(raw, dict), "step must be an object", path)
        at_ms = raw.get("at_ms")
        _expect(
            isinstance(at_ms, (int, float)) and not isinstance(at_ms, bool) and at_ms >= 0,
            "at_ms must be a non-negative number",
            f"{path}.at_ms",
        )
        _expect(at_ms >= prev_at, "at_ms must be non-decreasing", f"{path}.at_ms")
        prev_at = float(at_ms)
        action = raw.get("action")
        _expect(action in ("input", "transform", "scroll", "expect"), f"unknown action {action!r}", f"{path}.action")
        fields = {k: v for k, v in raw.items() if k not in ("at_ms", "action")}
        if action == "input":
            _expect(isinstance(fields.get("panel"), str), "input step needs a panel", f"{path}.panel")
            _expect(fields.get("kind") in EVENT_KINDS, f"unknown input kind {fields.get('kind')!r}", f"{path}.kind")
        elif action == "transform":
            _expect(isinstance(fields.get("panel"), str), "transform step needs a panel", f"{path}.panel")
            _expect(isinstance(fields.get("position"), list), "transform step needs a position", f"{path}.position")
        elif action == "scroll":
            for key in ("x", "y"):
                _expect(
                    isinstance(fields.get(key), (int, float)) and not isinstance(fields.get(key), bool),
                    f"scroll step needs numeric {key}",
                    f"{path}.{key}",
                )
        else:
            _expect(fields.get("check") in _CHECKS, f"unknown check {fields.get('check')!r}", f"{path}.check")
        steps.append(ScriptStep(at_ms=float(at_ms), action=action, fields=fields))

    duration = obj.get("duration_ms", steps[-1].at_ms if steps else 0.0)
    _expect(
        isinstance(duration, (int, float)) and not isinstance(duration, bool) and duration >= prev_at,
        "duration_ms must cover the last step",
        "$.duration_ms",
    )
    return ReplayScript(layout=layout, url=url, max_fps=max_fps, duration_ms=float(duration), steps=tuple(steps))


# -- sync checking ------------------------------------------------------------


def assert_sync(trace: list[tuple[int, tuple[tuple[str, int], ...]]]) -> tuple[bool, str]:
    """Check panel synchronization over a decompose trace.

    ``trace`` holds one entry per decompose batch: the capture seq plus the
    (panel_id, source_seq) pairs emitted. Passes iff every batch is
    single-seq and each panel's delivered seqs strictly increase.
    """
    last_seen: dict[str, int] = {}
    for batch_seq, emitted in trace:
        for panel_id, seq in emitted:
            if seq != batch_seq:
                return False, f"panel {panel_id} emitted seq {seq} in batch {batch_seq}"
            prev = last_seen.get(panel_id)
            if prev is not None and seq <= prev:
                return False, f"panel {panel_id} delivery went {prev} -> {seq}"
            last_seen[panel_id] = seq
    return True, ""


# -- execution -----------------------------------------------------------------


class VirtualClock:
    def __init__(self) -> None:
        self.now_ms = 0.0

    def advance_to(self, t_ms: float) -> None:
        if t_ms > self.now_ms:
            self.now_ms = t_ms


class _Run:
    def __init__(self, script: ReplayScript, store: LayoutStore, auto_scroll: bool):
        self.script = script
        self.clock = VirtualClock()
        self.bridge = MockBridge(clock=lambda: self.clock.now_ms)
        self.handle = self.bridge.navigate(script.url)
        doc = store.get(script.layout)
        if doc is None:
            raise LayoutError(f"no layout named {script.layout!r}")
        layout = resolve_layout(doc, self.bridge, self.handle)
        self.session = Session(self.bridge, self.handle, layout, auto_scroll=auto_scroll)
        self.capture = self.bridge.start_capture(self.handle, script.max_fps)
        self.trace: list[tuple[int, tuple[tuple[str, int], ...]]] = []
        self.panel_seqs: dict[str, list[int]] = {p: [] for p in layout.panel_ids}
        self.client_seq = 0
        self.report = ReplayReport(layout=script.layout, duration_ms=script.duration_ms)

    def next_seq(self) -> int:
        self.client_seq += 1
        return self.client_seq

    def capture_tick(self) -> None:
        frame = self.capture.next_frame()
        emitted = self.session.process_frame(frame)
        self.report.frames_captured += 1
        self.report.batches += 1
        self.report.frames_emitted += len(emitted)
        self.trace.append((frame.seq, tuple((pf.panel_id, pf.source_seq) for pf in emitted)))
        for pf in emitted:
            self.panel_seqs[pf.panel_id].append(pf.source_seq)


def _run_input(run: _Run, step: ScriptStep) -> None:
    f = step.fields
    run.session.handle_input(
        InputEventMsg(
            panel_id=f["panel"],
            kind=f["kind"],
            client_seq=run.next_seq(),
            u=f.get("u"),
            v=f.get("v"),
            button=f.get("button", "left"),
            modifiers=int(f.get("modifiers", 0)),
            delta_x=float(f.get("delta_x", 0.0)),
            delta_y=float(f.get("delta_y", 0.0)),
            key=f.get("key", ""),
            text=f.get("text", ""),
        ),
        client_id="replay",
    )


def _run_transform(run: _Run, step: ScriptStep) -> None:
    f = step.fields
    state = run.session.panel_state(f["panel"])
    size = tuple(f.get("size", state.pose.size if state else (0.5, 0.35)))
    orientation = tuple(f.get("orientation", (1.0, 0.0, 0.0, 0.0)))
    pose = PanelPose(position=tuple(f["position"]), orientation=orientation, size=size)
    run.session.handle_panel_transform(
        PanelTransformMsg(panel_id=f["panel"], pose=pose, client_seq=run.next_seq()),
        client_id="replay",
    )


def _check_expect(run: _Run, index: int, step: ScriptStep) -> AssertionResult:
    f = step.fields
    check = f["check"]
    if check == "injected":
        events = [e for e in run.bridge.injected_events(run.handle) if e.kind != "scroll"]
        offset = int(f.get("offset", -1))
        wanted = {k: v for k, v in f.items() if k in ("kind", "x", "y", "key", "button")}
        desc = "injected " + " ".join(f"{k}={v}" for k, v in sorted(wanted.items()))
        if not events:
            return AssertionResult(index, step.at_ms, desc, False, "no injected events")
        try:
            event = events[offset]
        except IndexError:
            return AssertionResult(index, step.at_ms, desc, False, f"no event at offset {offset}")
        mismatches = []
        for key, want in wanted.items():
            got = getattr(event, key, None) if key in ("kind", "x", "y") else event.payload.get(key)
            if got != want:
                mismatches.append(f"{key}: want {want!r}, got {got!r}")
        return AssertionResult(index, step.at_ms, desc, not mismatches, "; ".join(mismatches))
    if check == "mode":
        state = run.session.panel_state(f.get("panel", ""))
        desc = f"mode {f.get('panel')}={f.get('mode')}"
        if state is None:
            return AssertionResult(index, step.at_ms, desc, False, "unknown panel")
        return AssertionResult(index, step.at_ms, desc, state.input_mode == f.get("mode"), f"got {state.input_mode}")
    if check == "anchored":
        state = run.session.panel_state(f.get("panel", ""))
        desc = f"anchored {f.get('panel')}={f.get('anchored')}"
        if state is None:
            return AssertionResult(index, step.at_ms, desc, False, "unknown panel")
        return AssertionResult(index, step.at_ms, desc, state.anchored == bool(f.get("anchored")), f"got {state.anchored}")
    if check == "emitted":
        panel = f.get("panel", "")
        count = len(run.panel_seqs.get(panel, []))
        minimum = int(f.get("min", 1))
        desc = f"emitted {panel}>={minimum}"
        return AssertionResult(index, step.at_ms, desc, count >= minimum, f"got {count}")
    ok, detail = assert_sync(run.trace)
    return AssertionResult(index, step.at_ms, "sync", ok, detail)


def run_script(script: ReplayScript, store: LayoutStore | None = None, auto_scroll: bool = True) -> ReplayReport:
    """Execute a script against an in-process server session; mock bridge only.

    Assertion failures are recorded and the run continues; infrastructure
    failures (bad layout, bridge errors) raise.
    """
    run = _Run(script, store or LayoutStore(), auto_scroll)
    period = 1000.0 / script.max_fps

    # Merge script steps with capture ticks on the virtual timeline.
    events: list[tuple[float, int, int]] = []  # (at_ms, priority, index)
    for i, step in enumerate(run.script.steps):
        events.append((step.at_ms, 0, i))
    tick = 0.0
    tick_index = 0
    while tick <= script.duration_ms:
        events.append((tick, 1, tick_index))
        tick += period
        tick_index += 1
    events.sort(key=lambda e: (e[0], e[1], e[2]))

    for at_ms, priority, index in events:
        run.clock.advance_to(at_ms)
        if priority == 1:
            run.capture_tick()
            continue
        step = run.script.steps[index]
        if step.action == "input":
            _run_input(run, step)
        elif step.action == "transform":
            _run_transform(run, step)
        elif step.action == "scroll":
            run.bridge.scroll_to(run.handle, float(step.fields["x"]), float(step.fields["y"]))
        else:
            run.report.assertions.append(_check_expect(run, index, step))

    run.capture.stop()

    events_log = run.bridge.injected_events(run.handle)
    digest = hashlib.blake2b(digest_size=12)
    for e in events_log:
        digest.update(
            f"{e.index}|{e.kind}|{e.x}|{e.y}|{json.dumps(e.payload, sort_keys=True)}\n".encode()
        )
    run.report.injection_count = len(events_log)
    run.report.injection_digest = digest.hexdigest()
    run.report.panel_seq_trace = run.panel_seqs

    lat = run.session.latency_ms
    if lat:
        run.report.latency_ms = (min(lat), statistics.median(lat), max(lat))
    return run.report
