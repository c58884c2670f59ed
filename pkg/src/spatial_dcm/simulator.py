"""Deterministic simulation of the constrained SRBM under DCM control.

Two control modes:

``"zoh"``
    The controller ticks at ``control_rate`` and its wrench is held constant
    while RK4 integrates ``dt`` sub-steps in between.
``"continuous"``
    The control law is evaluated at every RK4 stage, so the simulation
    integrates the continuous closed loop. Needed wherever results are
    compared with the analytic LTI solution, since a held wrench adds a
    sampled-data error of order ``1/control_rate``. Torque saturation
    switches are located and stepped to exactly, which keeps RK4 at
    fourth order with the CoP constraint active.

Either way the log is sampled at ``control_rate``. Stance switches happen
instantaneously at segment boundaries, which must fall on the ``dt`` grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from .controller import applied_wrench, closed_loop_matrices, requested_torque, wrench_command
from .cop import SupportBounds, saturation_branch
from .core_model import PlannerParams, SpatialState, WrenchCommand, pitch_cross_term
from .reference import FootstepPlan, ReferenceTrajectory, backward_recursion, setpoint_reference

CONTROL_MODES = ("zoh", "continuous")
REFERENCE_MODES = ("recursion", "setpoints")
_MAX_SWITCHES = 8


class SimulationError(RuntimeError):
    pass


class DivergenceError(SimulationError):
    """The state left the configured bounds; ``log`` holds the rows up to that point."""

    def __init__(self, message: str, log: "TrajectoryLog"):
        super().__init__(message)
        self.log = log


def _grid_count(value: float, step: float, what: str) -> int:
    n = round(value / step)
    if n < 1 or abs(n * step - value) > 1e-9 * max(1.0, abs(value)):
        raise ValueError(f"{what} ({value}) must be a positive integer multiple of {step}")
    return n


@dataclass(frozen=True)
class SimConfig:
    params: PlannerParams
    plan: FootstepPlan
    dt: float = 1e-3
    control_rate: float = 1000.0
    control_mode: str = "zoh"
    scenario: str = "custom"
    initial: Optional[SpatialState] = None
    feedforward: bool = True
    cop_constraint: bool = True
    reference_mode: str = "recursion"
    divergence_position: float = 100.0
    divergence_angle: float = 10.0

    def __post_init__(self):
        if not (self.dt > 0 and self.control_rate > 0):
            raise ValueError("dt and control_rate must be positive")
        if self.control_mode not in CONTROL_MODES:
            raise ValueError(f"control_mode must be one of {CONTROL_MODES}")
        if self.reference_mode not in REFERENCE_MODES:
            raise ValueError(f"reference_mode must be one of {REFERENCE_MODES}")
        period = 1.0 / self.control_rate
        if self.dt > period * (1 + 1e-12):
            raise ValueError("dt must not exceed the control period")
        _grid_count(period, self.dt, "control period")
        for t in self.plan.boundaries[1:]:
            _grid_count(float(t), period, "segment boundary")

    @property
    def control_period(self) -> float:
        return 1.0 / self.control_rate

    @property
    def duration(self) -> float:
        return self.plan.duration

    def reference(self) -> ReferenceTrajectory:
        if self.reference_mode == "setpoints":
            return setpoint_reference(self.plan, self.params)
        return backward_recursion(self.plan, self.params)

    def initial_state(self) -> SpatialState:
        """Given initial state, or rest at the start of the reference."""
        if self.initial is not None:
            return self.initial
        ref = self.reference().evaluate(0.0, 0)
        return SpatialState(ref.xi_l, np.zeros(3), ref.xi_a, 0.0, 0.0)

    def replace(self, **changes) -> "SimConfig":
        from dataclasses import replace
        return replace(self, **changes)


_LOG_FIELDS = ("t", "x", "xdot", "theta", "thetadot", "xi_l", "xi_a", "xi_l_d", "xi_l_dot_d", "xi_a_d",
               "xi_a_dot_d", "f_ext", "tau_ext", "tau_requested", "tau_bar", "r_ecmp", "r_vrp",
               "phi_vro", "r_cop", "r_cop_exact", "saturated", "r_foot", "segment")


@dataclass
class TrajectoryLog:
    """Time series sampled at the control rate, one row per tick plus the final time."""

    params: PlannerParams
    plan: FootstepPlan
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    theta: np.ndarray
    thetadot: np.ndarray
    xi_l: np.ndarray
    xi_a: np.ndarray
    xi_l_d: np.ndarray
    xi_l_dot_d: np.ndarray
    xi_a_d: np.ndarray
    xi_a_dot_d: np.ndarray
    f_ext: np.ndarray
    tau_ext: np.ndarray
    tau_requested: np.ndarray
    tau_bar: np.ndarray
    r_ecmp: np.ndarray
    r_vrp: np.ndarray
    phi_vro: np.ndarray
    r_cop: np.ndarray
    r_cop_exact: np.ndarray
    saturated: np.ndarray
    r_foot: np.ndarray
    segment: np.ndarray
    diverged: bool = False
    settle_tol: float = field(default=1e-2)

    @property
    def angular_momentum(self) -> np.ndarray:
        return self.params.I * self.thetadot

    @property
    def pitch_torque_total(self) -> np.ndarray:
        """Cross term plus external torque about the CoM, per row."""
        cross = (self.r_foot[:, 2] - self.x[:, 2]) * self.f_ext[:, 0] - (self.r_foot[:, 0] - self.x[:, 0]) * self.f_ext[:, 2]
        return cross + self.tau_ext

    def state_at(self, i: int) -> SpatialState:
        return SpatialState(self.x[i], self.xdot[i], self.theta[i], self.thetadot[i], self.t[i])

    def settling_times(self, tol: Optional[float] = None) -> list:
        """Per segment: seconds from segment start until ``|theta - setpoint| <= tol``
        first holds, or ``None``."""
        tol = self.settle_tol if tol is None else tol
        out = []
        for i, step in enumerate(self.plan.steps):
            rows = np.flatnonzero(self.segment == i)
            hit = rows[np.abs(self.theta[rows] - step.phi_vro) <= tol] if rows.size else rows
            out.append(float(self.t[hit[0]] - self.t[rows[0]]) if hit.size else None)
        return out

    def summary(self) -> dict:
        phis = [s.phi_vro for s in self.plan.steps]
        sat = self.saturated.astype(bool)
        episodes = int(np.count_nonzero(sat[1:] & ~sat[:-1]) + (1 if sat.size and sat[0] else 0))
        return {
            "duration": float(self.t[-1] - self.t[0]),
            "rows": int(self.t.size),
            "diverged": bool(self.diverged),
            "peak_abs_r_cop": float(np.max(np.abs(self.r_cop))),
            "peak_abs_r_cop_exact": float(np.max(np.abs(self.r_cop_exact))),
            "r_cop_thres": self.params.r_cop_thres,
            "max_linear_tracking_error": float(np.max(np.linalg.norm(self.xi_l - self.xi_l_d, axis=1))),
            "max_angular_tracking_error": float(np.max(np.abs(self.xi_a - self.xi_a_d))),
            "vro_setpoints": phis,
            "setpoint_switches": int(sum(1 for a, b in zip(phis, phis[1:]) if a != b)),
            "settling_tol": self.settle_tol,
            "settling_times": self.settling_times(),
            "final_theta": float(self.theta[-1]),
            "constraint_active_ticks": int(np.count_nonzero(sat)),
            "constraint_activations": episodes,
        }


class _Recorder:
    def __init__(self):
        self.rows = {k: [] for k in _LOG_FIELDS}

    def add(self, t, y, ref, cmd: WrenchCommand, foot, seg, params: PlannerParams):
        r = self.rows
        r["t"].append(t)
        r["x"].append(y[0:3].copy())
        r["xdot"].append(y[3:6].copy())
        r["theta"].append(y[6])
        r["thetadot"].append(y[7])
        r["xi_l"].append(y[0:3] + params.b * y[3:6])
        r["xi_a"].append(y[6] + params.eta * y[7])
        r["xi_l_d"].append(ref.xi_l)
        r["xi_l_dot_d"].append(ref.xi_l_dot)
        r["xi_a_d"].append(ref.xi_a)
        r["xi_a_dot_d"].append(ref.xi_a_dot)
        r["f_ext"].append(cmd.f_ext)
        r["tau_ext"].append(cmd.tau_ext)
        r["tau_requested"].append(cmd.tau_requested)
        r["tau_bar"].append(cmd.tau_bar)
        r["r_ecmp"].append(cmd.r_ecmp)
        r["r_vrp"].append(cmd.r_vrp)
        r["phi_vro"].append(cmd.phi_vro)
        r["r_cop"].append(cmd.r_cop)
        r["r_cop_exact"].append(cmd.r_cop_exact)
        r["saturated"].append(cmd.saturated)
        r["r_foot"].append(foot)
        r["segment"].append(seg)

    def build(self, params, plan, diverged=False) -> TrajectoryLog:
        arrays = {}
        for k, v in self.rows.items():
            if k == "saturated":
                arrays[k] = np.array(v, dtype=bool)
            elif k == "segment":
                arrays[k] = np.array(v, dtype=int)
            else:
                arrays[k] = np.array(v, dtype=float)
        return TrajectoryLog(params=params, plan=plan, diverged=diverged, **arrays)


def rk4_step(fun, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step of ``y' = fun(t, y)``."""
    k1 = fun(t, y)
    k2 = fun(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = fun(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = fun(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rhs(y: np.ndarray, f_ext: np.ndarray, tau_ext: float, r_foot: np.ndarray, params: PlannerParams) -> np.ndarray:
    dy = np.empty(8)
    dy[0:3] = y[3:6]
    dy[3:6] = f_ext / params.m
    dy[5] -= params.g
    dy[6] = y[7]
    dy[7] = (pitch_cross_term(y[0:3], r_foot, f_ext) + tau_ext) / params.I
    return dy


def integrate_step(state: SpatialState, wrench: WrenchCommand, r_foot, dt: float,
                   params: PlannerParams) -> SpatialState:
    """Advance one RK4 step of length ``dt`` with the wrench held constant."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    f = np.asarray(wrench.f_ext, dtype=float)
    foot = np.asarray(r_foot, dtype=float)
    y = rk4_step(lambda t, y: _rhs(y, f, wrench.tau_ext, foot, params), state.t, state.as_vector(), dt)
    if not np.all(np.isfinite(y)):
        raise SimulationError(f"non-finite state after step at t={state.t}")
    return SpatialState.from_vector(y, state.t + dt)


def _control(y, t, ref, foot, config: SimConfig) -> WrenchCommand:
    return wrench_command(y[0:3], y[3:6], y[6], y[7], ref, foot, config.params,
                          config.cop_constraint, config.feedforward)


def run_scenario(config: SimConfig) -> TrajectoryLog:
    """Simulate ``config`` from its initial state to the end of the plan.

    Raises :class:`DivergenceError` (carrying the partial log) when the CoM
    leaves a ball of radius ``divergence_position`` or ``|theta|`` exceeds
    ``divergence_angle``.
    """
    params, plan = config.params, config.plan
    traj = config.reference()
    n_sub = _grid_count(config.control_period, config.dt, "control period")
    seg_ticks = [round(float(b) / config.control_period) for b in plan.boundaries]
    n_ticks = seg_ticks[-1]
    y = config.initial_state().as_vector()
    rec = _Recorder()

    seg = 0
    for k in range(n_ticks + 1):
        t = k * config.control_period
        if k < n_ticks:
            while k >= seg_ticks[seg + 1]:
                seg += 1
        foot = plan.steps[seg].r_foot
        ref = traj.evaluate(t, seg)
        cmd = _control(y, t, ref, foot, config)
        rec.add(t, y, ref, cmd, foot, seg, params)
        if k == n_ticks:
            break

        if config.control_mode == "zoh":
            f, tau = cmd.f_ext, cmd.tau_ext
            fun = lambda ts, ys: _rhs(ys, f, tau, foot, params)
            for j in range(n_sub):
                y = rk4_step(fun, t + j * config.dt, y, config.dt)
        elif not config.cop_constraint:
            def fun(ts, ys):
                f, tau = applied_wrench(ys[0:3], ys[3:6], ys[6], ys[7], traj.evaluate(ts, seg), params,
                                        False, config.feedforward)
                return _rhs(ys, f, tau, foot, params)
            for j in range(n_sub):
                y = rk4_step(fun, t + j * config.dt, y, config.dt)
        else:
            for j in range(n_sub):
                y = _switched_step(y, t + j * config.dt, config.dt, traj, seg, foot, config)

        if not np.all(np.isfinite(y)) or np.linalg.norm(y[0:3]) > config.divergence_position \
                or abs(y[6]) > config.divergence_angle:
            raise DivergenceError(f"state diverged before t={t + config.control_period:.6g}",
                                  rec.build(params, plan, diverged=True))
    return rec.build(params, plan)


def _branch(y, t, traj, seg, config: SimConfig) -> int:
    p = config.params
    tau = requested_torque(y[0:3], y[3:6], y[6], y[7], traj.evaluate(t, seg), p, config.feedforward)
    return saturation_branch(tau, SupportBounds(p.r_cop_thres), p.m, p.g)


def _switched_step(y, t, dt, traj, seg, foot, config: SimConfig, branch=None, depth=0) -> np.ndarray:
    """One RK4 step of the saturating closed loop with switch location.

    The torque saturation makes the vector field only piecewise smooth, and an
    RK4 step across a switch drops to low order. The step is therefore split
    at the located switching time and each piece integrated on a single
    saturation branch.
    """
    p = config.params

    def on_branch(b):
        def fun(ts, ys):
            f, tau = applied_wrench(ys[0:3], ys[3:6], ys[6], ys[7], traj.evaluate(ts, seg), p,
                                    True, config.feedforward, b)
            return _rhs(ys, f, tau, foot, p)
        return fun

    b0 = _branch(y, t, traj, seg, config) if branch is None else branch
    fun = on_branch(b0)
    y1 = rk4_step(fun, t, y, dt)
    b1 = _branch(y1, t + dt, traj, seg, config)
    if b1 == b0 or depth >= _MAX_SWITCHES:
        return y1

    # leaving the unsaturated band (b0 = 0) or re-entering it (b0 = +/-1)
    side = b1 if b0 == 0 else b0
    limit = p.m * p.g * p.r_cop_thres

    def switching(h):
        yh = rk4_step(fun, t, y, h) if h > 0 else y
        tau = requested_torque(yh[0:3], yh[3:6], yh[6], yh[7], traj.evaluate(t + h, seg), p, config.feedforward)
        return side * tau - limit

    g0, g1 = switching(0.0), switching(dt)
    if g0 * g1 > 0:
        # branch changed without crossing this boundary (both edges at once); fall back
        return y1
    h = scipy.optimize.brentq(switching, 0.0, dt, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    y_mid = rk4_step(fun, t, y, h) if h > 0 else y
    b_next = side if b0 == 0 else 0
    if dt - h <= 1e-15:
        return y_mid
    return _switched_step(y_mid, t + h, dt - h, traj, seg, foot, config, b_next, depth + 1)


def _segment_generator(config: SimConfig, seg, ff: float) -> np.ndarray:
    """13x13 generator of ``[x, xi_l, theta, xi_a, w_l(3), w_a, 1]`` on one segment,
    where ``w`` is the exponential part of the desired DCM."""
    p = config.params
    cl = closed_loop_matrices(p)
    Bf = cl.B_full
    M = np.zeros((13, 13))
    M[0:8, 0:8] = cl.A_full
    M[0:8, 8:11] = Bf[:, 0:3] + ff * Bf[:, 3:6] / p.b
    M[0:8, 11] = Bf[:, 6] + ff * Bf[:, 7] / p.eta
    M[0:8, 12] = Bf[:, 0:3] @ seg.r_vrp + Bf[:, 6] * seg.phi_vro
    M[8:11, 8:11] = np.eye(3) / p.b
    M[11, 11] = 1.0 / p.eta
    return M


def analytic_closed_loop(config: SimConfig, t) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Exact solution of the stacked closed-loop LTI system at times ``t``.

    Each segment is solved with a matrix exponential of the system augmented
    by the reference's exponential modes, then chained. The contact-force
    moment about the CoM is taken as zero, which holds while the eCMP stays
    on the stance foot. Returns ``(xi_l, xi_a, theta, x)``.
    """
    if config.cop_constraint:
        raise ValueError("the analytic closed loop requires the CoP constraint to be off")
    p = config.params
    traj = config.reference()
    ff = 1.0 if config.feedforward else 0.0
    s0 = config.initial_state()
    X = np.concatenate([s0.x, s0.x + p.b * s0.xdot, [s0.theta, s0.theta + p.eta * s0.thetadot]])

    starts = []
    gens = []
    for seg in traj.segments:
        starts.append(X.copy())
        M = _segment_generator(config, seg, ff)
        gens.append(M)
        X = _propagate(M, X, seg, seg.t_start, seg.t_end, p)

    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((t.size, 8))
    for n, tn in enumerate(t):
        i = traj.segment_index(float(tn))
        seg = traj.segments[i]
        out[n] = _propagate(gens[i], starts[i], seg, seg.t_start, float(tn), p)
    return out[:, 3:6], out[:, 7], out[:, 6], out[:, 0:3]


def _propagate(M, X, seg, t0: float, t1: float, p: PlannerParams) -> np.ndarray:
    w_l = math.exp((t0 - seg.t_end) / p.b) * (seg.xi_l_eos - seg.r_vrp)
    w_a = math.exp((t0 - seg.t_end) / p.eta) * (seg.xi_a_eos - seg.phi_vro)
    Z = np.concatenate([X, w_l, [w_a, 1.0]])
    return (scipy.linalg.expm(M * (t1 - t0)) @ Z)[0:8]


def open_loop_response(params: PlannerParams, xi0, r_vrp, phi_vro: float, t) -> tuple[np.ndarray, np.ndarray]:
    """Open-loop DCM under constant VRP/VRO: deviations grow as ``exp(t/b)``
    and ``exp(t/eta)``. Returns ``(xi_l, xi_a)``."""
    xi0 = np.asarray(xi0, dtype=float)
    r_vrp = np.asarray(r_vrp, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    xi_l = r_vrp + np.exp(t / params.b)[:, None] * (xi0[0:3] - r_vrp)
    xi_a = phi_vro + np.exp(t / params.eta) * (xi0[3] - phi_vro)
    return xi_l, xi_a
