import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatial_dcm.core_model import PlannerParams
from spatial_dcm.reference import (FootstepPlan, PlanError, Step, backward_recursion, generate_walking_plan,
                                   sample_reference, setpoint_reference)

PI8 = math.pi / 8


@pytest.fixture
def params():
    return PlannerParams(m=65.1, I=2.3)


class TestWalkingPlan:
    def test_forward_positions(self):
        plan = generate_walking_plan(0.25, 1.0, 4, 0.0)
        assert [s.r_foot[0] for s in plan.steps] == pytest.approx([0.25, 0.5, 0.75, 1.0])
        assert [s.phi_vro for s in plan.steps] == pytest.approx([math.pi / 6, -math.pi / 6] * 2)
        assert plan.duration == 4.0

    def test_standing_plan(self):
        plan = generate_walking_plan(0.0, 1.0, 5, 0.0, vro_setpoints=(PI8, -PI8), final_hold=1.0)
        assert len(plan.steps) == 6
        assert [s.phi_vro for s in plan.steps] == pytest.approx([PI8, -PI8, PI8, -PI8, PI8, 0.0])
        assert all(np.array_equal(s.r_foot, [0, 0, 0]) for s in plan.steps)

    def test_lateral_alternation(self):
        plan = generate_walking_plan(0.2, 0.5, 3, 0.1)
        assert [s.r_foot[1] for s in plan.steps] == [0.1, -0.1, 0.1]

    def test_single_step(self):
        assert len(generate_walking_plan(0.25, 1.0, 1).steps) == 1

    @pytest.mark.parametrize("args", [(-0.1, 1.0, 3), (0.1, 0.0, 3), (0.1, 1.0, 0)])
    def test_invalid(self, args):
        with pytest.raises(PlanError):
            generate_walking_plan(*args)


class TestPlan:
    def test_empty_rejected(self):
        with pytest.raises(PlanError):
            FootstepPlan(())

    def test_uneven_ground_rejected(self):
        with pytest.raises(PlanError):
            FootstepPlan((Step([0, 0, 0], 0, 1), Step([0, 0, 0.1], 0, 1)))

    def test_nonpositive_duration(self):
        with pytest.raises(PlanError):
            Step([0, 0, 0], 0.0, 0.0)

    def test_dict_roundtrip(self):
        plan = generate_walking_plan(0.25, 1.0, 3, 0.05)
        again = FootstepPlan.from_dict(plan.to_dict())
        assert again.terminal == plan.terminal
        for a, b in zip(plan.steps, again.steps):
            assert np.array_equal(a.r_foot, b.r_foot) and a.phi_vro == b.phi_vro and a.duration == b.duration


class TestBackwardRecursion:
    def test_single_segment_fixed_point(self, params):
        traj = backward_recursion(FootstepPlan((Step([0, 0, 0], PI8, 1.0),)), params)
        for t in np.linspace(0, 1, 11):
            s = sample_reference(traj, t)
            assert s.xi_a == PI8 and s.xi_a_dot == 0.0

    def test_two_segment_keypoint(self):
        p = PlannerParams(m=65.1, I=2.3, eta=0.3162)
        plan = FootstepPlan((Step([0, 0, 0], PI8, 1.0), Step([0, 0, 0], -PI8, 1.0)))
        # frozen from mpmath: -pi/8 + exp(-1/0.3162) * (pi/8 + pi/8)
        traj = backward_recursion(plan, p, terminal_xi_a=PI8)
        assert traj.segments[0].xi_a_eos == pytest.approx(-0.359463020770752868, abs=1e-14)
        # resting at the last setpoint makes the last segment constant
        assert backward_recursion(plan, p).segments[0].xi_a_eos == pytest.approx(-PI8, abs=1e-15)

    def test_equal_vrps_constant_reference(self, params):
        plan = FootstepPlan(tuple(Step([0.3, 0.1, 0], phi, 0.7) for phi in (0.1, -0.2, 0.3)))
        traj = backward_recursion(plan, params)
        for t in np.linspace(0, plan.duration, 23):
            s = sample_reference(traj, t)
            assert np.allclose(s.xi_l, [0.3, 0.1, params.h], atol=1e-15)
            assert np.allclose(s.xi_l_dot, 0, atol=1e-15)

    def test_empty_plan(self, params):
        class Empty:
            steps = ()
        with pytest.raises(PlanError):
            backward_recursion(Empty(), params)

    def test_vrp_height(self, params):
        traj = backward_recursion(generate_walking_plan(0.25, 1.0, 2), params)
        assert all(seg.r_vrp[2] == pytest.approx(params.h) for seg in traj.segments)

    @settings(max_examples=50, deadline=None)
    @given(phis=st.lists(st.floats(-1, 1), min_size=2, max_size=6),
           xs=st.lists(st.floats(-1, 1), min_size=6, max_size=6),
           durs=st.lists(st.floats(0.2, 2.0), min_size=6, max_size=6),
           eta=st.floats(0.05, 0.5))
    def test_continuity_and_dynamics(self, phis, xs, durs, eta):
        p = PlannerParams(m=60.0, I=2.0, eta=eta)
        plan = FootstepPlan(tuple(Step([xs[i], 0.5 * xs[-1 - i], 0], phi, durs[i]) for i, phi in enumerate(phis)))
        traj = backward_recursion(plan, p)
        for i in range(1, len(traj.segments)):
            tb = traj.segments[i].t_start
            left, right = traj.evaluate(tb, i - 1), traj.evaluate(tb, i)
            assert np.allclose(left.xi_l, right.xi_l, rtol=0, atol=1e-12)
            assert left.xi_a == pytest.approx(right.xi_a, abs=1e-12)
        for i, seg in enumerate(traj.segments):
            for t in np.linspace(seg.t_start, seg.t_end, 5):
                s = traj.evaluate(t, i)
                assert np.allclose(s.xi_l_dot, (s.xi_l - seg.r_vrp) / p.b, atol=1e-12)
                assert s.xi_a_dot == pytest.approx((s.xi_a - seg.phi_vro) / p.eta, abs=1e-12)
        end = sample_reference(traj, traj.t_end)
        assert np.allclose(end.xi_l_dot, 0, atol=1e-15) and end.xi_a_dot == 0.0

    def test_periodic_terminal(self, params):
        plan = FootstepPlan((Step([0, 0, 0], PI8, 1.0), Step([0, 0, 0], -PI8, 1.0)), terminal="periodic")
        traj = backward_recursion(plan, params)
        start = traj.evaluate(0.0, 0)
        assert traj.segments[-1].xi_a_eos == pytest.approx(start.xi_a, abs=1e-14)
        assert np.allclose(traj.segments[-1].xi_l_eos, start.xi_l, atol=1e-14)

    def test_periodic_linear_shift(self, params):
        plan = generate_walking_plan(0.25, 1.0, 4, terminal="periodic")
        traj = backward_recursion(plan, params)
        start = traj.evaluate(0.0, 0)
        # one cycle is 4 strides of 0.25 m
        assert traj.segments[-1].xi_l_eos[0] - start.xi_l[0] == pytest.approx(1.0, abs=1e-12)


class TestSampling:
    def test_finite_difference_derivative(self, params):
        traj = backward_recursion(generate_walking_plan(0.25, 1.0, 4), params)
        h = 1e-5
        errs = []
        for i, seg in enumerate(traj.segments):
            for t in np.linspace(seg.t_start + 0.01, seg.t_end - 0.01, 20):
                s = traj.evaluate(t, i)
                fd_a = (traj.evaluate(t + h, i).xi_a - traj.evaluate(t - h, i).xi_a) / (2 * h)
                fd_l = (traj.evaluate(t + h, i).xi_l - traj.evaluate(t - h, i).xi_l) / (2 * h)
                errs.append(max(abs(fd_a - s.xi_a_dot), np.max(np.abs(fd_l - s.xi_l_dot))))
        # central-difference truncation h^2 * xi''' / 6 plus rounding
        assert max(errs) < 1e-6

    def test_out_of_range(self, params):
        traj = backward_recursion(generate_walking_plan(0.25, 1.0, 2), params)
        with pytest.raises(ValueError):
            sample_reference(traj, 5.0, out_of_range="raise")
        s = sample_reference(traj, 5.0)
        assert s.clamped and s.xi_a_dot == 0.0
        assert s.xi_a == pytest.approx(traj.segments[-1].xi_a_eos)
        s0 = sample_reference(traj, -1.0)
        assert s0.clamped and s0.xi_a == pytest.approx(traj.evaluate(0.0).xi_a)

    def test_boundary_side(self, params):
        traj = backward_recursion(generate_walking_plan(0.25, 1.0, 3), params)
        assert traj.segment_index(1.0) == 1
        assert traj.segment_index(1.0, side="left") == 0

    def test_setpoint_reference(self, params):
        plan = generate_walking_plan(0.25, 1.0, 2)
        traj = setpoint_reference(plan, params)
        s = sample_reference(traj, 0.5)
        assert s.xi_a == pytest.approx(math.pi / 6) and s.xi_a_dot == 0.0
        assert np.allclose(s.xi_l, [0.25, 0, params.h])
