import pytest
from hypothesis import given, strategies as st

from btw.errors import InvalidInputError
from btw.layouts import Distance, PlacementHint, Zone
from btw.policy import (
    DEFAULT_DESK,
    FLAT_QUAT,
    IDENTITY_QUAT,
    RAY,
    TOUCH,
    PanelPose,
    PolicyConfig,
    SurfacePlane,
    distance_to_user,
    input_mode,
    placement_from_hint,
    snap_pose,
)

CFG = PolicyConfig()


class TestInputMode:
    def test_below_lower_threshold(self):
        assert input_mode(0.4, RAY, CFG) == TOUCH

    def test_band_preserves_previous(self):
        assert input_mode(0.7, TOUCH, CFG) == TOUCH
        assert input_mode(0.7, RAY, CFG) == RAY

    def test_above_upper_threshold(self):
        assert input_mode(0.9, TOUCH, CFG) == RAY

    def test_thresholds_inclusive(self):
        assert input_mode(0.6, RAY, CFG) == TOUCH
        assert input_mode(0.75, TOUCH, CFG) == RAY

    def test_negative_distance_rejected(self):
        with pytest.raises(InvalidInputError):
            input_mode(-0.1, TOUCH, CFG)

    def test_sweep_has_exactly_two_transitions(self):
        mode = TOUCH
        transitions = 0
        distances = [i / 100 for i in range(0, 121)] + [i / 100 for i in range(119, -1, -1)]
        for d in distances:
            new = input_mode(d, mode, CFG)
            if new != mode:
                transitions += 1
            mode = new
        assert transitions == 2

    @given(prev=st.sampled_from([TOUCH, RAY]))
    def test_monotone_in_distance(self, prev):
        results = [input_mode(i / 200, prev, CFG) for i in range(0, 241)]
        changes = sum(1 for a, b in zip(results, results[1:]) if a != b)
        assert changes <= 1


def project_onto_plane(point, plane):
    """Oracle: classic point-plane projection."""
    d = sum((p - o) * n for p, o, n in zip(point, plane.origin, plane.normal))
    return tuple(p - d * n for p, n in zip(point, plane.normal)), d


class TestSnapPose:
    def test_near_desk_snaps_flat(self):
        pose = PanelPose(position=(0.1, 0.03, -0.4))
        snapped, anchored = snap_pose(pose, (DEFAULT_DESK,), CFG)
        assert anchored
        want, d = project_onto_plane(pose.position, DEFAULT_DESK)
        assert abs(d) == pytest.approx(0.03)
        assert snapped.position == pytest.approx(want)
        assert snapped.orientation == pytest.approx(FLAT_QUAT)
        assert snapped.size == pose.size

    def test_far_above_desk_unchanged(self):
        pose = PanelPose(position=(0.0, 0.5, -0.4))
        snapped, anchored = snap_pose(pose, (DEFAULT_DESK,), CFG)
        assert not anchored
        assert snapped is pose

    def test_outside_extent_unchanged(self):
        # Projected point (2.0, 0, -0.4) is 2 m right of the desk center;
        # the desk is only 1.2 m wide.
        pose = PanelPose(position=(2.0, 0.02, -0.4))
        projected, d = project_onto_plane(pose.position, DEFAULT_DESK)
        assert abs(d) <= CFG.snap_threshold
        assert abs(projected[0] - DEFAULT_DESK.origin[0]) > DEFAULT_DESK.extent[0] / 2
        snapped, anchored = snap_pose(pose, (DEFAULT_DESK,), CFG)
        assert not anchored

    def test_idempotent(self):
        pose = PanelPose(position=(0.2, 0.04, -0.5))
        once, anchored = snap_pose(pose, (DEFAULT_DESK,), CFG)
        assert anchored
        twice, anchored2 = snap_pose(once, (DEFAULT_DESK,), CFG)
        assert anchored2
        for a, b in zip(once.position, twice.position):
            assert abs(a - b) <= 1e-9
        for a, b in zip(once.orientation, twice.orientation):
            assert abs(a - b) <= 1e-9

    def test_nearest_surface_wins_then_lowest_index(self):
        lower = SurfacePlane(origin=(0, 0.0, -0.4), normal=(0, 1, 0), extent=(2, 2))
        upper = SurfacePlane(origin=(0, 0.04, -0.4), normal=(0, 1, 0), extent=(2, 2))
        pose = PanelPose(position=(0, 0.03, -0.4))
        snapped, anchored = snap_pose(pose, (lower, upper), CFG)
        assert anchored
        assert snapped.position[1] == pytest.approx(0.04)  # 0.01 away beats 0.03

        mid = PanelPose(position=(0, 0.02, -0.4))
        snapped, _ = snap_pose(mid, (lower, upper), CFG)
        assert snapped.position[1] == pytest.approx(0.0)  # tie: first surface wins

    def test_vertical_surface(self):
        wall = SurfacePlane(origin=(0, 0.5, -1.0), normal=(0, 0, 1), extent=(2, 2))
        pose = PanelPose(position=(0.1, 0.5, -0.98))
        snapped, anchored = snap_pose(pose, (wall,), CFG)
        assert anchored
        assert snapped.position == pytest.approx((0.1, 0.5, -1.0))
        assert snapped.orientation == pytest.approx(IDENTITY_QUAT)


class TestPlacement:
    def test_midair_center_mid_matches_anchor_table(self):
        pose = placement_from_hint(PlacementHint(Zone.MIDAIR_CENTER, Distance.MID, 1.0), CFG)
        assert pose.position == (0.0, 0.45, -0.8)
        assert pose.orientation == IDENTITY_QUAT  # facing the user

    def test_surface_near_is_flat_on_desk(self):
        pose = placement_from_hint(PlacementHint(Zone.SURFACE, Distance.NEAR, 1.0), CFG)
        assert pose.orientation == pytest.approx(FLAT_QUAT)
        _, d = project_onto_plane(pose.position, DEFAULT_DESK)
        assert abs(d) <= 1e-9

    def test_scale_doubles_size_not_position(self):
        one = placement_from_hint(PlacementHint(Zone.MIDAIR_SIDE, Distance.FAR, 1.0), CFG)
        two = placement_from_hint(PlacementHint(Zone.MIDAIR_SIDE, Distance.FAR, 2.0), CFG)
        assert two.position == one.position
        assert two.size == (one.size[0] * 2, one.size[1] * 2)

    def test_pure_function(self):
        hint = PlacementHint(Zone.PERIPHERAL, Distance.NEAR, 1.3)
        assert placement_from_hint(hint, CFG) == placement_from_hint(hint, CFG)

    def test_every_zone_distance_has_an_anchor(self):
        for zone in Zone:
            for distance in Distance:
                pose = placement_from_hint(PlacementHint(zone, distance, 1.0), CFG)
                assert pose.size[0] > 0


class TestTypes:
    def test_quaternion_must_be_normalized(self):
        with pytest.raises(InvalidInputError):
            PanelPose(position=(0, 0, 0), orientation=(1, 1, 0, 0))

    def test_surface_normal_must_be_unit(self):
        with pytest.raises(InvalidInputError):
            SurfacePlane(origin=(0, 0, 0), normal=(0, 2, 0), extent=(1, 1))

    def test_config_threshold_ordering(self):
        with pytest.raises(InvalidInputError):
            PolicyConfig(d_touch=0.8, d_ray=0.75)

    def test_distance_to_user(self):
        pose = PanelPose(position=(0.0, 0.45, -0.8))
        assert distance_to_user(pose, CFG) == pytest.approx(0.8)
        assert distance_to_user(PanelPose(position=(3, 4.45, 0)), CFG) == pytest.approx(5.0)
