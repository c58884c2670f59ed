import numpy as np
import pytest

from spatial_dcm.config import load_scenario
from spatial_dcm.core_model import PlannerParams, SpatialState, WrenchCommand
from spatial_dcm.reference import FootstepPlan, Step, generate_walking_plan
from spatial_dcm.simulator import (DivergenceError, SimConfig, SimulationError, analytic_closed_loop,
                                   integrate_step, open_loop_response, run_scenario)


def _wrench(f, tau=0.0):
    z = np.zeros(3)
    return WrenchCommand(f_ext=np.asarray(f, float), tau_ext=tau, r_ecmp=z, r_vrp=z, phi_vro=0.0, r_cop=0.0,
                         tau_requested=tau, tau_bar=0.0, saturated=False, r_ecmp_nominal=z, r_cop_exact=0.0,
                         contact_moment=0.0)


@pytest.fixture
def params():
    return PlannerParams(m=65.1, I=2.3)


@pytest.fixture(scope="module")
def walking_log():
    return run_scenario(load_scenario("walking_pi6").sim)


class TestIntegrateStep:
    def test_equilibrium(self, params):
        s = SpatialState([0, 0, params.h], [0, 0, 0], 0.0, 0.0)
        out = integrate_step(s, _wrench([0, 0, params.m * params.g]), [0, 0, 0], 1e-3, params)
        assert np.allclose(out.x, s.x, atol=1e-15) and out.theta == 0.0
        assert out.t == pytest.approx(1e-3)

    def test_ballistic(self, params):
        s = SpatialState([0, 0, 1.0], [0.5, 0, 2.0], 0.1, 0.3)
        out = s
        for _ in range(100):
            out = integrate_step(out, _wrench([0, 0, 0]), [0, 0, 0], 1e-2, params)
        t = 1.0
        # free fall is quadratic, so RK4 is exact up to rounding
        assert np.allclose(out.x, [0.5 * t, 0, 1.0 + 2.0 * t - 0.5 * params.g * t**2], atol=1e-12)
        assert out.theta == pytest.approx(0.1 + 0.3 * t, abs=1e-12)

    def test_constant_torque_momentum(self, params):
        s = SpatialState([0, 0, params.h], [0, 0, 0], 0.0, 0.0)
        out = s
        for _ in range(10):
            out = integrate_step(out, _wrench([0, 0, params.m * params.g], 4.6), [0, 0, 0], 1e-2, params)
        assert params.I * out.thetadot == pytest.approx(4.6 * 0.1, rel=1e-12)

    def test_rejects_bad_dt(self, params):
        s = SpatialState([0, 0, 1], [0, 0, 0], 0, 0)
        with pytest.raises(ValueError):
            integrate_step(s, _wrench([0, 0, 0]), [0, 0, 0], 0.0, params)

    def test_non_finite(self, params):
        s = SpatialState([0, 0, 1], [0, 0, 0], 0, 0)
        with pytest.raises(SimulationError), np.errstate(over="ignore", invalid="ignore"):
            integrate_step(s, _wrench([1e308, 0, 0]), [0, 0, 0], 1e10, params)


class TestConfigValidation:
    def test_boundary_off_grid(self, params):
        plan = FootstepPlan((Step([0, 0, 0], 0, 0.0015), Step([0, 0, 0], 0, 1)))
        with pytest.raises(ValueError):
            SimConfig(params, plan)

    def test_dt_exceeds_period(self, params):
        with pytest.raises(ValueError):
            SimConfig(params, generate_walking_plan(0, 1, 1), dt=2e-3)

    def test_mode_names(self, params):
        with pytest.raises(ValueError):
            SimConfig(params, generate_walking_plan(0, 1, 1), control_mode="exact")


class TestRunScenario:
    def test_rows_and_segments(self, walking_log):
        log = walking_log
        assert log.t.size == 4001
        assert log.t[-1] == pytest.approx(4.0)
        assert list(np.unique(log.segment)) == [0, 1, 2, 3]
        assert np.all(np.diff(log.segment) >= 0)

    def test_stance_foot_piecewise_constant(self, walking_log):
        log = walking_log
        for i, step in enumerate(log.plan.steps):
            assert np.all(log.r_foot[log.segment == i] == step.r_foot)

    def test_vertical_force_near_weight(self, walking_log):
        mg = walking_log.params.m * walking_log.params.g
        assert np.all(np.abs(walking_log.f_ext[:, 2] - mg) <= 0.15 * mg)

    def test_vrp_offset_every_row(self, walking_log):
        p = walking_log.params
        assert np.allclose(walking_log.r_vrp - walking_log.r_ecmp, [0, 0, p.b**2 * p.g], atol=1e-12)

    def test_cop_within_bounds(self, walking_log):
        assert np.max(np.abs(walking_log.r_cop)) <= walking_log.params.r_cop_thres

    def test_deterministic(self):
        cfg = SimConfig(PlannerParams(m=65.1, I=2.3, eta=0.2), generate_walking_plan(0.25, 0.5, 2))
        a, b = run_scenario(cfg), run_scenario(cfg)
        for name in ("x", "xdot", "theta", "thetadot", "f_ext", "tau_ext", "r_cop"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_single_setpoint_stays_constant(self, params):
        plan = FootstepPlan((Step([0.1, 0.0, 0.0], 0.2, 1.0),))
        log = run_scenario(SimConfig(params, plan))
        assert np.allclose(log.x, [0.1, 0.0, params.h], atol=1e-12)
        assert np.allclose(log.theta, 0.2, atol=1e-14)
        assert np.allclose(log.tau_ext, 0.0, atol=1e-10)

    def test_momentum_matches_torque(self, params):
        p = params.replace(eta=0.2)
        plan = generate_walking_plan(0.25, 1.0, 2)
        log = run_scenario(SimConfig(p, plan, dt=1e-3, control_rate=1000, control_mode="continuous"))
        L = log.angular_momentum
        dt = log.t[1] - log.t[0]
        dL = (L[2:] - L[:-2]) / (2 * dt)
        torque = log.pitch_torque_total[1:-1]
        # drop rows next to stance switches, where the reference derivative jumps
        keep = np.ones(dL.size, bool)
        for tb in plan.boundaries[1:]:
            keep &= np.abs(log.t[1:-1] - tb) > 2.5 * dt
        scale = np.max(np.abs(torque))
        assert np.max(np.abs(dL - torque)[keep]) < 1e-3 * scale

    def test_divergence_keeps_partial_log(self, params):
        plan = generate_walking_plan(0.0, 1.0, 2)
        init = SpatialState([0, 0, params.h], [0, 0, 0], 0.5, 0.0)
        # a huge gain with a held wrench overshoots every tick and blows up
        cfg = SimConfig(params.replace(k_a=5000.0), plan, initial=init, cop_constraint=False,
                        divergence_angle=5.0)
        with pytest.raises(DivergenceError) as err:
            run_scenario(cfg)
        log = err.value.log
        assert log.diverged and 0 < log.t.size < 2001

    def test_summary_keys(self, walking_log):
        s = walking_log.summary()
        assert s["duration"] == pytest.approx(4.0)
        assert s["setpoint_switches"] == 3 and not s["diverged"]


class TestAnalytic:
    def test_fixed_point(self, params):
        plan = FootstepPlan((Step([0.2, 0, 0], 0.3, 2.0),))
        cfg = SimConfig(params, plan, cop_constraint=False)
        xi_l, xi_a, theta, x = analytic_closed_loop(cfg, np.linspace(0, 2, 9))
        assert np.allclose(xi_l, [0.2, 0, params.h], atol=1e-12)
        assert np.allclose(theta, 0.3, atol=1e-12) and np.allclose(xi_a, 0.3, atol=1e-12)

    def test_requires_unconstrained(self, params):
        with pytest.raises(ValueError):
            analytic_closed_loop(SimConfig(params, generate_walking_plan(0, 1, 1)), 0.0)

    def test_theta_follows_xi_a(self, params):
        # xi_a held at its setpoint: theta - phi decays exactly as exp(-t/eta)
        p = params.replace(eta=0.25)
        init = SpatialState([0, 0, p.h], [0, 0, 0], 0.4, (0.1 - 0.4) / 0.25)
        cfg = SimConfig(p, FootstepPlan((Step([0, 0, 0], 0.1, 2.0),)), initial=init, cop_constraint=False)
        t = np.linspace(0, 2, 21)
        _, xi_a, theta, _ = analytic_closed_loop(cfg, t)
        assert np.allclose(xi_a, 0.1, atol=1e-12)
        assert np.allclose(theta - 0.1, 0.3 * np.exp(-t / 0.25), atol=1e-12)

    def test_long_segment_steady_state(self, params):
        init = SpatialState([0.05, 0, params.h], [0, 0, 0], 0.3, 0.0)
        cfg = SimConfig(params, FootstepPlan((Step([0, 0, 0], 0.0, 10.0),)), initial=init, cop_constraint=False)
        xi_l, xi_a, theta, _ = analytic_closed_loop(cfg, 10.0)
        assert abs(xi_a[0]) < 1e-6 and abs(theta[0]) < 1e-6 and np.max(np.abs(xi_l[0] - [0, 0, params.h])) < 1e-6

    def test_open_loop_diverges(self, params):
        t = np.array([0.0, 1.0, 2.0])
        xi_l, xi_a = open_loop_response(params, [0.01, 0, params.h, 0.01], [0, 0, params.h], 0.0, t)
        assert np.allclose(xi_l[:, 0], 0.01 * np.exp(t / params.b))
        assert np.allclose(xi_a, 0.01 * np.exp(t / params.eta))
        assert xi_a[-1] > 100 * xi_a[0]

    def test_open_loop_fixed_point(self, params):
        xi_l, xi_a = open_loop_response(params, [0, 0, 1, 0.2], [0, 0, 1], 0.2, np.linspace(0, 5, 6))
        assert np.all(xi_a == 0.2) and np.allclose(xi_l, [0, 0, 1])


@pytest.fixture(scope="module")
def saturation_log():
    return run_scenario(load_scenario("saturation_pi2").sim)


class TestSaturationRun:
    @pytest.fixture
    def log(self, saturation_log):
        return saturation_log

    def test_contact_moment_breaks_decoupling(self, log):
        # with the eCMP pushed off the foot, the force adds a pitch moment the
        # cross-term-free angular model does not contain
        contact = log.pitch_torque_total - log.tau_ext
        sat = log.saturated
        assert sat.any()
        # the contact moment carries the residual torque, so it is nonzero exactly while saturated
        assert np.all(np.abs(contact[sat]) > 0.3 * np.abs(log.tau_bar[sat]))
        assert np.allclose(contact[sat], log.tau_bar[sat], rtol=0.1, atol=0.05)
        residual = log.params.eta / log.params.I * contact[sat]
        assert np.max(np.abs(residual)) > 0.1

    def test_cop_clipped(self, log):
        assert np.max(np.abs(log.r_cop)) == log.params.r_cop_thres
        assert np.max(np.abs(log.r_cop_exact[~log.saturated])) <= log.params.r_cop_thres + 1e-12

    def test_continuous_mode_agrees_with_held_wrench(self, log):
        sim = load_scenario("saturation_pi2").sim
        cont = run_scenario(sim.replace(control_mode="continuous"))
        # sampled-data difference is first order in the 1 ms control period
        assert np.max(np.abs(cont.theta - log.theta)) < 5e-3
        assert int(np.count_nonzero(cont.saturated)) == pytest.approx(int(np.count_nonzero(log.saturated)), abs=5)

    def test_switch_location_converges(self):
        sim = load_scenario("saturation_pi2").sim.replace(control_mode="continuous", control_rate=50.0)
        runs = [run_scenario(sim.replace(dt=dt)) for dt in (0.02, 0.01, 0.005)]
        d1 = np.max(np.abs(runs[0].theta - runs[1].theta))
        d2 = np.max(np.abs(runs[1].theta - runs[2].theta))
        assert d1 / d2 > 10
