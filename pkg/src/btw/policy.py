"""Placement and input-mode policy for workspace panels.

Panels close enough to reach get direct touch; distant panels get ray
input, with a hysteresis band between the two thresholds so a panel
hovering near the boundary never flickers between modes. Panels dropped
close to a configured surface plane snap flat onto it.

Workspace frame: meters, x right, y up, z toward the user, origin at the
desk-front center. All functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidInputError
from .layouts import Distance, PlacementHint, Zone

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # (w, x, y, z)

TOUCH = "touch"
RAY = "ray"

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)
# -90 degrees about x: panel face normal rotates from +z (facing the user)
# to +y (lying flat on a horizontal surface).
FLAT_QUAT: Quat = (math.sqrt(0.5), -math.sqrt(0.5), 0.0, 0.0)


def _sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _norm(a: Vec3) -> float:
    return math.sqrt(_dot(a, a))


def _scaled(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


@dataclass(frozen=True)
class PanelPose:
    """Position, orientation, and physical size of one panel."""

    position: Vec3
    orientation: Quat = IDENTITY_QUAT
    size: tuple[float, float] = (0.5, 0.35)

    def __post_init__(self) -> None:
        q = self.orientation
        norm = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
        if abs(norm - 1.0) > 1e-6:
            raise InvalidInputError(f"orientation quaternion not normalized (|q|={norm})")
        if self.size[0] <= 0 or self.size[1] <= 0:
            raise InvalidInputError(f"panel size must be positive, got {self.size}")


@dataclass(frozen=True)
class SurfacePlane:
    """A bounded physical surface panels can snap onto.

    ``extent`` is (width, depth) centered on ``origin``; for a horizontal
    plane width runs along x and depth along z.
    """

    origin: Vec3
    normal: Vec3
    extent: tuple[float, float]

    def __post_init__(self) -> None:
        if abs(_norm(self.normal) - 1.0) > 1e-6:
            raise InvalidInputError("surface normal must be unit length")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise InvalidInputError("surface extent must be positive")

    def axes(self) -> tuple[Vec3, Vec3]:
        """In-plane (width, depth) axes; deterministic for any normal."""
        up: Vec3 = (0.0, 1.0, 0.0)
        c = _cross(up, self.normal)
        if _norm(c) < 1e-9:
            # Horizontal plane: width along x, depth along z.
            return (1.0, 0.0, 0.0), (0.0, 0.0, 1.0)
        depth = _scaled(c, 1.0 / _norm(c))
        width = _cross(depth, self.normal)
        return width, depth


DEFAULT_DESK = SurfacePlane(origin=(0.0, 0.0, -0.4), normal=(0.0, 1.0, 0.0), extent=(1.2, 0.8))

# Anchor table realizing the spatial roles: primary viewing mid-air ahead
# of the user, side content offset laterally, peripheral content farther
# and lower priority, surface content on the desk. Positions in meters,
# sizes (w, h) at hint scale 1.0.
DEFAULT_ZONE_ANCHORS: dict[tuple[Zone, Distance], tuple[Vec3, Quat, tuple[float, float]]] = {
    (Zone.MIDAIR_CENTER, Distance.NEAR): ((0.0, 0.45, -0.45), IDENTITY_QUAT, (0.56, 0.35)),
    (Zone.MIDAIR_CENTER, Distance.MID): ((0.0, 0.45, -0.8), IDENTITY_QUAT, (0.64, 0.4)),
    (Zone.MIDAIR_CENTER, Distance.FAR): ((0.0, 0.45, -1.2), IDENTITY_QUAT, (0.8, 0.5)),
    (Zone.MIDAIR_SIDE, Distance.NEAR): ((0.5, 0.45, -0.45), IDENTITY_QUAT, (0.4, 0.3)),
    (Zone.MIDAIR_SIDE, Distance.MID): ((0.6, 0.45, -0.8), IDENTITY_QUAT, (0.48, 0.36)),
    (Zone.MIDAIR_SIDE, Distance.FAR): ((0.8, 0.45, -1.2), IDENTITY_QUAT, (0.56, 0.42)),
    (Zone.PERIPHERAL, Distance.NEAR): ((0.8, 0.35, -0.6), IDENTITY_QUAT, (0.36, 0.27)),
    (Zone.PERIPHERAL, Distance.MID): ((0.95, 0.35, -1.0), IDENTITY_QUAT, (0.44, 0.33)),
    (Zone.PERIPHERAL, Distance.FAR): ((1.1, 0.35, -1.4), IDENTITY_QUAT, (0.52, 0.39)),
    (Zone.SURFACE, Distance.NEAR): ((0.0, 0.0, -0.25), FLAT_QUAT, (0.42, 0.28)),
    (Zone.SURFACE, Distance.MID): ((0.0, 0.0, -0.45), FLAT_QUAT, (0.42, 0.28)),
    (Zone.SURFACE, Distance.FAR): ((0.0, 0.0, -0.65), FLAT_QUAT, (0.42, 0.28)),
}


@dataclass(frozen=True)
class PolicyConfig:
    """Thresholds and anchor tables driving the interaction policy.

    ``d_touch``/``d_ray`` bound the hysteresis band for mode switching;
    both are configurable because reachability varies per user and setup.
    """

    d_touch: float = 0.6
    d_ray: float = 0.75
    snap_threshold: float = 0.05
    user_reference: Vec3 = (0.0, 0.45, 0.0)
    surfaces: tuple[SurfacePlane, ...] = (DEFAULT_DESK,)
    zone_anchors: dict[tuple[Zone, Distance], tuple[Vec3, Quat, tuple[float, float]]] = field(
        default_factory=lambda: dict(DEFAULT_ZONE_ANCHORS)
    )

    def __post_init__(self) -> None:
        if not (0 < self.d_touch < self.d_ray):
            raise InvalidInputError(f"need 0 < d_touch < d_ray, got {self.d_touch}/{self.d_ray}")
        if self.snap_threshold <= 0:
            raise InvalidInputError("snap_threshold must be > 0")


def input_mode(distance: float, prev: str, cfg: PolicyConfig) -> str:
    """Touch when close, ray when far, previous mode inside the band."""
    if distance < 0:
        raise InvalidInputError(f"distance must be >= 0, got {distance}")
    if distance <= cfg.d_touch:
        return TOUCH
    if distance >= cfg.d_ray:
        return RAY
    return prev


def distance_to_user(pose: PanelPose, cfg: PolicyConfig) -> float:
    return _norm(_sub(pose.position, cfg.user_reference))


def _align_to_normal(normal: Vec3) -> Quat:
    """Shortest-arc rotation taking the panel's facing axis (+z) to ``normal``."""
    z: Vec3 = (0.0, 0.0, 1.0)
    d = _dot(z, normal)
    if d < -1.0 + 1e-9:
        return (0.0, 1.0, 0.0, 0.0)  # 180 degrees about x
    c = _cross(z, normal)
    q = (1.0 + d, c[0], c[1], c[2])
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def snap_pose(pose: PanelPose, surfaces: tuple[SurfacePlane, ...], cfg: PolicyConfig) -> tuple[PanelPose, bool]:
    """Snap the pose flat onto the nearest qualifying surface.

    A surface qualifies when the panel center, projected onto the plane,
    falls inside its extent and the center's distance to the plane is at
    most the snap threshold. Nearest surface wins; ties go to the lowest
    index. Non-qualifying poses come back unchanged.
    """
    best: tuple[float, int, PanelPose] | None = None
    for idx, surface in enumerate(surfaces):
        offset = _sub(pose.position, surface.origin)
        signed = _dot(offset, surface.normal)
        if abs(signed) > cfg.snap_threshold:
            continue
        width_axis, depth_axis = surface.axes()
        if abs(_dot(offset, width_axis)) > surface.extent[0] / 2:
            continue
        if abs(_dot(offset, depth_axis)) > surface.extent[1] / 2:
            continue
        projected = _sub(pose.position, _scaled(surface.normal, signed))
        candidate = PanelPose(
            position=projected,
            orientation=_align_to_normal(surface.normal),
            size=pose.size,
        )
        if best is None or abs(signed) < best[0]:
            best = (abs(signed), idx, candidate)
    if best is None:
        return pose, False
    return best[2], True


def placement_from_hint(hint: PlacementHint, cfg: PolicyConfig) -> PanelPose:
    """Initial pose for a placement hint, straight from the anchor table.

    The hint's scale multiplies the anchor's base size; position and
    orientation come from the table untouched.
    """
    anchor = cfg.zone_anchors.get((hint.zone, hint.distance))
    if anchor is None:
        raise InvalidInputError(f"no anchor for zone={hint.zone.value} distance={hint.distance.value}")
    position, orientation, base_size = anchor
    return PanelPose(
        position=position,
        orientation=orientation,
        size=(base_size[0] * hint.scale, base_size[1] * hint.scale),
    )
