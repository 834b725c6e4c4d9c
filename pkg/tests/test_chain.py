"""Tarsal chain kinematics against a brute-force planar construction.

The oracle never uses the closed-form span equations: it places the guide
holes explicitly, rotates the distal anchor with a 2D rotation matrix and
measures Euclidean distances.
"""

import math

import numpy as np
import pytest

from tarsim.chain import (ChainGeometry, ChainState, SegmentGeometry,
                          chain_pose, chain_pull, chord_length,
                          claw_actuation, default_chain_geometry,
                          full_bend_pull, max_chain_pull, pull_angle,
                          rest_state, restoring_force, segment_pull,
                          segment_string_span, solve_bend_from_pull,
                          stiffness_curve, total_bend_angle,
                          DEFAULT_CLAW_MAX_OPENING)


def oracle_joint(radius, anchor_long, anchor_trans, rest_span, alpha):
    """Planar construction: chord, bent span and pull, no trig identities.

    Joint centre at the origin; distal guide hole A at (0, -radius);
    proximal guide hole B a distance rest_span from A along the direction
    (-anchor_long, +anchor_trans); bending rotates A clockwise by alpha.
    """
    radius = np.asarray(radius, dtype=float)
    A = np.stack([np.zeros_like(radius), -radius], axis=-1)
    u = np.stack([-np.asarray(anchor_long, dtype=float),
                  np.asarray(anchor_trans, dtype=float)], axis=-1)
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    B = A + np.asarray(rest_span, dtype=float)[..., None] * u
    c, s = np.cos(-np.asarray(alpha)), np.sin(-np.asarray(alpha))
    A2 = np.stack([c * A[..., 0] - s * A[..., 1],
                   s * A[..., 0] + c * A[..., 1]], axis=-1)
    chord = np.linalg.norm(A2 - A, axis=-1)
    span = np.linalg.norm(B - A2, axis=-1)
    return chord, span, np.asarray(rest_span) - span


def oracle_beta(radius, anchor_long, anchor_trans, alpha):
    """Signed angle from the chord direction to the string direction."""
    A = np.array([0.0, -radius])
    u = np.array([-anchor_long, anchor_trans])
    c, s = math.cos(-alpha), math.sin(-alpha)
    A2 = np.array([c * A[0] - s * A[1], s * A[0] + c * A[1]])
    chord = A2 - A
    ang = math.atan2(u[1], u[0]) - math.atan2(chord[1], chord[0])
    return math.atan2(math.sin(ang), math.cos(ang))


def random_geometries(rng, n):
    radius = rng.uniform(0.5, 5.0, n)
    anchor_long = rng.uniform(0.5, 6.0, n)
    anchor_trans = rng.uniform(0.0, 3.0, n)
    rest_span = rng.uniform(0.5, 8.0, n)
    alpha_max = rng.uniform(0.05, 0.95 * math.pi / 2, n)
    alpha = rng.uniform(0.0, 1.0, n) * alpha_max
    return radius, anchor_long, anchor_trans, rest_span, alpha_max, alpha


class TestChordLength:
    def test_zero_bend_is_zero(self):
        assert chord_length(3.7, 0.0) == 0.0

    def test_quarter_turn(self):
        assert chord_length(1.7, math.pi / 2) == pytest.approx(
            2.4041630560342617, abs=1e-12)

    def test_against_rotation_oracle(self):
        # frozen from the explicit 2D-rotation oracle
        assert chord_length(1.0, 0.41) == pytest.approx(
            0.40713431980955594, abs=1e-12)

    def test_monotone_on_range(self):
        a = np.linspace(0.0, math.pi - 1e-9, 500)
        l = chord_length(2.0, a)
        assert np.all(np.diff(l) > 0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            chord_length(-1.0, 0.5)
        with pytest.raises(ValueError):
            chord_length(1.0, -0.1)
        with pytest.raises(ValueError):
            chord_length(1.0, math.pi)


class TestPullAngle:
    def test_zero(self):
        assert pull_angle(0.0, 3.0, 0.0) == 0.0

    def test_no_transverse_offset(self):
        assert pull_angle(0.84, 3.0, 0.0) == pytest.approx(0.42, abs=1e-15)

    def test_direct_value(self):
        assert pull_angle(0.41, 3.0, 1.0) == pytest.approx(
            -0.1167505543966422, abs=1e-15)

    def test_matches_geometric_angle(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            r = rng.uniform(0.5, 5.0)
            h1 = rng.uniform(0.5, 6.0)
            h2 = rng.uniform(0.0, 3.0)
            a = rng.uniform(1e-6, 1.4)
            assert pull_angle(a, h1, h2) == pytest.approx(
                oracle_beta(r, h1, h2, a), abs=1e-9)

    def test_requires_positive_h1(self):
        with pytest.raises(ValueError):
            pull_angle(0.3, 0.0, 1.0)


class TestSegmentSpanAndPull:
    def test_rest_span_at_zero(self):
        g = SegmentGeometry(2.0, 3.0, 0.5, 0.4)
        assert segment_string_span(g, 0.0) == g.rest_span
        assert segment_pull(g, 0.0) == 0.0

    def test_collinear_case(self):
        # anchor_trans chosen so beta hits zero at alpha*: span is |d1 - l|
        alpha_star = 0.6
        h1, h2 = 3.0, 3.0 * math.tan(alpha_star / 2)
        g = SegmentGeometry(2.0, h1, h2, 0.7)
        l = chord_length(2.0, alpha_star)
        assert segment_string_span(g, alpha_star) == pytest.approx(
            abs(g.rest_span - l), abs=1e-12)

    def test_pull_zero_exactly_for_any_geometry(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            g = SegmentGeometry(rng.uniform(0.5, 5), rng.uniform(0.5, 6),
                                rng.uniform(0, 3), rng.uniform(0.05, 1.5))
            assert segment_pull(g, 0.0) == 0.0

    def test_against_planar_oracle(self):
        rng = np.random.default_rng(21)
        r, h1, h2, d1, amax, a = random_geometries(rng, 2000)
        _, span_o, pull_o = oracle_joint(r, h1, h2, d1, a)
        for i in range(2000):
            g = SegmentGeometry(r[i], h1[i], h2[i], amax[i], rest_span=d1[i])
            assert segment_string_span(g, a[i]) == pytest.approx(
                span_o[i], abs=1e-9)
            assert segment_pull(g, a[i]) == pytest.approx(pull_o[i], abs=1e-9)

    def test_alpha_out_of_range(self):
        g = SegmentGeometry(2.0, 3.0, 0.5, 0.4)
        with pytest.raises(ValueError):
            segment_string_span(g, 0.5)


class TestDefaultGeometry:
    def test_five_segments(self):
        g = default_chain_geometry()
        assert len(g.segments) == 5

    def test_bend_budget(self):
        g = default_chain_geometry()
        assert math.degrees(g.max_bend.sum()) == pytest.approx(65.8, abs=1e-9)
        assert math.degrees(g.segments[-1].max_bend) == pytest.approx(23.5)

    def test_full_bend_pull_is_calibrated(self):
        assert full_bend_pull(default_chain_geometry()) == pytest.approx(
            5.5, abs=1e-9)

    def test_measured_capacity_with_slack(self):
        g = default_chain_geometry(socket_slack=True)
        assert max_chain_pull(g) == pytest.approx(13.1, abs=1e-9)
        assert g.socket_slack[1] == pytest.approx(2.9, abs=1e-12)

    def test_segment_pull_monotone(self):
        for seg in default_chain_geometry().segments:
            a = np.linspace(0.0, seg.max_bend, 400)
            assert np.all(np.diff(segment_pull(seg, a)) > 0)


class TestChainPull:
    def test_rest_is_zero(self):
        g = default_chain_geometry()
        assert chain_pull(g, rest_state(g)) == 0.0

    def test_full_bend_reaches_quoted_total(self):
        g = default_chain_geometry()
        state = ChainState(g.max_bend, np.zeros(5))
        assert chain_pull(g, state) == pytest.approx(5.5, abs=1e-9)

    def test_compression_adds_but_does_not_reach_measured_total(self):
        # measured per-segment shortenings on top of the full bend: the sum
        # documents that compression alone leaves a gap to the measured
        # 13.1 mm (socket deformation accounts for the rest)
        g = default_chain_geometry()
        comp = np.array([1.07, 0.74, 1.9, 0.31, 0.68])
        state = ChainState(g.max_bend, comp)
        total = chain_pull(g, state)
        assert total == pytest.approx(5.5 + 4.7, abs=1e-9)
        assert total < 13.1

    def test_monotone_in_each_joint(self):
        g = default_chain_geometry()
        rng = np.random.default_rng(5)
        for _ in range(50):
            frac = rng.uniform(0.0, 0.9, 5)
            theta = frac * g.max_bend
            base = chain_pull(g, ChainState(theta, np.zeros(5)))
            for i in range(5):
                bumped = theta.copy()
                bumped[i] += 0.05 * g.max_bend[i]
                assert chain_pull(g, ChainState(bumped, np.zeros(5))) > base

    def test_dimension_mismatch(self):
        g = default_chain_geometry()
        with pytest.raises(ValueError):
            chain_pull(g, ChainState(np.zeros(4), np.zeros(4)))


class TestSolveBendFromPull:
    def test_zero_gives_rest(self):
        g = default_chain_geometry()
        st = solve_bend_from_pull(g, 0.0)
        assert np.all(st.theta == 0.0) and np.all(st.compression == 0.0)

    def test_full_bend_total(self):
        g = default_chain_geometry()
        st = solve_bend_from_pull(g, 5.5)
        assert total_bend_angle(st) == pytest.approx(65.8, abs=0.1)
        assert np.allclose(st.theta, g.max_bend, atol=1e-9)

    def test_round_trip_random_pulls(self):
        g = default_chain_geometry(socket_slack=True)
        cap = max_chain_pull(g)
        rng = np.random.default_rng(9)
        for p in rng.uniform(0.0, cap, 1000):
            st = solve_bend_from_pull(g, float(p))
            assert abs(chain_pull(g, st) - p) < 1e-9

    def test_overflow_goes_to_compression_then_slack(self):
        g = default_chain_geometry(socket_slack=True)
        st = solve_bend_from_pull(g, 13.1)
        assert np.allclose(st.theta, g.max_bend, atol=1e-12)
        assert np.allclose(st.compression, g.axial_caps, atol=1e-9)
        assert st.slack[1] == pytest.approx(2.9, abs=1e-9)

    def test_excess_pull_clamps_with_warning(self):
        g = default_chain_geometry()
        with pytest.warns(UserWarning, match="clamp"):
            st = solve_bend_from_pull(g, 50.0)
        assert chain_pull(g, st) == pytest.approx(max_chain_pull(g), abs=1e-9)

    def test_identity_on_reachable_states(self):
        # states on the solver's distribution path map back to themselves
        g = default_chain_geometry(socket_slack=True)
        rng = np.random.default_rng(23)
        for p in rng.uniform(0.0, max_chain_pull(g), 200):
            st = solve_bend_from_pull(g, float(p))
            st2 = solve_bend_from_pull(g, chain_pull(g, st))
            assert np.allclose(st2.theta, st.theta, atol=1e-7)
            assert np.allclose(st2.compression, st.compression, atol=1e-7)
            assert np.allclose(st2.slack, st.slack, atol=1e-7)


class TestTotalBendAngle:
    def test_rest(self):
        assert total_bend_angle(rest_state(default_chain_geometry())) == 0.0

    def test_measured_fixture_sum(self):
        # bench-measured per-segment angles; plain arithmetic sum
        st = ChainState(np.radians([2.0, 13.4, 10.0, 9.9, 26.3]), np.zeros(5))
        assert total_bend_angle(st) == pytest.approx(61.6, abs=1e-9)


class TestRestoringForce:
    def test_rest_zero(self):
        g = default_chain_geometry()
        assert restoring_force(g, rest_state(g)) == 0.0

    def test_full_pull_value(self):
        g = default_chain_geometry()
        st = solve_bend_from_pull(g, 5.5)
        assert restoring_force(g, st) == pytest.approx(0.54 * 5.5, abs=1e-9)

    def test_monotone_in_pull(self):
        g = default_chain_geometry()
        pulls = np.linspace(0.0, max_chain_pull(g), 30)
        forces = [restoring_force(g, solve_bend_from_pull(g, float(p)))
                  for p in pulls]
        assert np.all(np.diff(forces) > 0)


class TestStiffnessCurve:
    def test_zero_displacement(self):
        g = default_chain_geometry()
        assert stiffness_curve(g, "flexible", [0.0]) == pytest.approx([0.0])

    def test_rigid_saturates_at_cap(self):
        g = default_chain_geometry()
        d = np.linspace(0.0, 3.0 * g.vertical_cap / g.k_rigid, 200)
        f = stiffness_curve(g, "rigid", d)
        assert f[-1] == pytest.approx(2.46, abs=1e-12)
        assert np.all(f <= 2.46 + 1e-12)

    def test_slope_ordering_everywhere_below_saturation(self):
        g = default_chain_geometry()
        d = np.linspace(0.0, g.vertical_cap / g.k_rigid, 100)
        fr = stiffness_curve(g, "rigid", d)
        ff = stiffness_curve(g, "flexible", d)
        slopes_r, slopes_f = np.diff(fr) / np.diff(d), np.diff(ff) / np.diff(d)
        assert np.all(slopes_r > slopes_f)

    def test_constructor_enforces_ordering(self):
        g = default_chain_geometry()
        with pytest.raises(ValueError):
            ChainGeometry(segments=g.segments, k_flex=1.0, k_rigid=0.5)

    def test_rejects_unsorted(self):
        g = default_chain_geometry()
        with pytest.raises(ValueError):
            stiffness_curve(g, "rigid", [1.0, 0.5])


class TestClawActuation:
    def test_no_pull_closed(self):
        st = claw_actuation(0.0, 0.8)
        assert not st.engaged and st.opening_angle == 0.0

    def test_full_pull_open(self):
        st = claw_actuation(1.0, 0.8)
        assert st.engaged
        assert st.opening_angle == pytest.approx(DEFAULT_CLAW_MAX_OPENING)

    def test_linear_ramp(self):
        st = claw_actuation(0.9, 0.8)
        assert st.engaged
        assert st.opening_angle == pytest.approx(
            0.5 * DEFAULT_CLAW_MAX_OPENING, abs=1e-12)

    def test_engagement_monotone(self):
        engaged = [claw_actuation(f, 0.8).engaged
                   for f in np.linspace(0.0, 1.0, 101)]
        assert engaged == sorted(engaged)

    def test_opening_monotone(self):
        angles = [claw_actuation(f, 0.8).opening_angle
                  for f in np.linspace(0.0, 1.0, 101)]
        assert np.all(np.diff(angles) >= 0)


class TestChainPose:
    def test_rest_collinear(self):
        g = default_chain_geometry()
        pose = chain_pose(g, rest_state(g))
        assert np.allclose(pose[:, 1], 0.0)
        assert np.allclose(pose[:, 0], np.cumsum(g.segment_lengths))

    def test_full_bend_tip_below_base(self):
        g = default_chain_geometry()
        pose = chain_pose(g, solve_bend_from_pull(g, 5.5))
        assert pose[-1, 1] < 0.0

    def test_against_complex_exponential_oracle(self):
        g = default_chain_geometry()
        rng = np.random.default_rng(17)
        for _ in range(100):
            theta = rng.uniform(0.0, 1.0, 5) * g.max_bend
            comp = rng.uniform(0.0, 1.0, 5) * g.axial_caps
            st = ChainState(theta, comp)
            z = np.cumsum((np.array(g.segment_lengths) - comp)
                          * np.exp(-1j * np.cumsum(theta)))
            pose = chain_pose(g, st)
            assert np.allclose(pose[:, 0], z.real, atol=1e-9)
            assert np.allclose(pose[:, 1], z.imag, atol=1e-9)


class TestValidation:
    def test_segment_geometry_invariants(self):
        with pytest.raises(ValueError):
            SegmentGeometry(0.0, 3.0, 0.5, 0.4)
        with pytest.raises(ValueError):
            SegmentGeometry(2.0, -1.0, 0.5, 0.4)
        with pytest.raises(ValueError):
            SegmentGeometry(2.0, 3.0, -0.5, 0.4)
        with pytest.raises(ValueError):
            SegmentGeometry(2.0, 3.0, 0.5, math.pi / 2)
        with pytest.raises(ValueError):
            SegmentGeometry(2.0, 3.0, 0.5, 0.4, axial_cap=-1.0)

    def test_rest_span_derived_from_anchors(self):
        g = SegmentGeometry(2.0, 3.0, 4.0, 0.4)
        assert g.rest_span == pytest.approx(5.0)

    def test_chain_needs_five_segments(self):
        seg = SegmentGeometry(2.0, 3.0, 0.5, 0.4)
        with pytest.raises(ValueError):
            ChainGeometry(segments=(seg,) * 4)

    def test_state_nonnegative(self):
        with pytest.raises(ValueError):
            ChainState(np.array([-0.1] * 5), np.zeros(5))
