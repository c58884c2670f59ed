"""Footstep / VRO plans and piecewise-exponential desired DCM trajectories.

Within a segment with constant VRP ``p`` (linear) or VRO ``phi`` (angular) the
open-loop DCM obeys ``xi_dot = (xi - p) / kappa``. Its bounded solution ending
at the end-of-step keypoint ``xi_eos`` is::

    xi(t) = p + exp((t - t_end) / kappa) * (xi_eos - p)

and keypoints are chained backwards from the terminal DCM.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core_model import PlannerParams, vrp_from_ecmp

TERMINAL_MODES = ("rest", "periodic")


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    r_foot: np.ndarray
    phi_vro: float
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "r_foot", np.asarray(self.r_foot, dtype=float).reshape(3))
        object.__setattr__(self, "phi_vro", float(self.phi_vro))
        object.__setattr__(self, "duration", float(self.duration))
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise PlanError(f"step duration must be positive, got {self.duration!r}")
        if not (np.all(np.isfinite(self.r_foot)) and math.isfinite(self.phi_vro)):
            raise PlanError("step entries must be finite")


@dataclass(frozen=True)
class FootstepPlan:
    """Timed stance feet with one VRO setpoint per stance phase.

    ``terminal`` selects the boundary condition used by
    :func:`backward_recursion` when no terminal DCM is given: ``"rest"`` ends
    at the last setpoint, ``"periodic"`` repeats the plan shifted by
    ``period_shift`` (defaults to the mean stride times the number of steps).
    """

    steps: tuple
    terminal: str = "rest"
    period_shift: Optional[np.ndarray] = None

    def __post_init__(self):
        steps = tuple(s if isinstance(s, Step) else Step(*s) for s in self.steps)
        if not steps:
            raise PlanError("a footstep plan needs at least one step")
        z = steps[0].r_foot[2]
        if any(abs(s.r_foot[2] - z) > 1e-12 for s in steps):
            raise PlanError("all foot positions must share the same height (flat ground)")
        if self.terminal not in TERMINAL_MODES:
            raise PlanError(f"terminal must be one of {TERMINAL_MODES}, got {self.terminal!r}")
        object.__setattr__(self, "steps", steps)
        if self.period_shift is not None:
            object.__setattr__(self, "period_shift", np.asarray(self.period_shift, dtype=float).reshape(3))

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.steps))

    @property
    def boundaries(self) -> np.ndarray:
        """Segment start times followed by the final end time."""
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.steps])])

    def to_dict(self) -> dict:
        """Explicit-steps form used in scenario files."""
        d = {
            "kind": "explicit",
            "terminal": self.terminal,
            "steps": [{"r_foot": [float(v) for v in s.r_foot], "phi_vro": s.phi_vro,
                       "duration": s.duration} for s in self.steps],
        }
        if self.period_shift is not None:
            d["period_shift"] = [float(v) for v in self.period_shift]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FootstepPlan":
        steps = [Step(s["r_foot"], s["phi_vro"], s["duration"]) for s in d["steps"]]
        return cls(tuple(steps), terminal=d.get("terminal", "rest"),
                   period_shift=d.get("period_shift"))


def generate_walking_plan(v_x: float, t_step: float, n_steps: int, lateral_offset: float = 0.0,
                          vro_setpoints: Sequence[float] = (math.pi / 6, -math.pi / 6),
                          final_hold: float = 0.0, final_hold_phi: float = 0.0,
                          terminal: str = "rest", foot_z: float = 0.0) -> FootstepPlan:
    """Constant-speed walking plan.

    Step ``k`` (1-based) lands at ``x = k * v_x * t_step`` and
    ``y = +lateral_offset`` for odd ``k``, ``-lateral_offset`` for even ``k``.
    VRO setpoints are cycled from ``vro_setpoints``. With ``v_x = 0`` this is
    a standing plan. A positive ``final_hold`` appends a segment on the last
    foot with setpoint ``final_hold_phi``.
    """
    if v_x < 0 or not t_step > 0 or n_steps < 1:
        raise PlanError("need v_x >= 0, t_step > 0 and n_steps >= 1")
    if not vro_setpoints:
        raise PlanError("vro_setpoints must not be empty")
    stride = v_x * t_step
    steps = []
    for k in range(1, n_steps + 1):
        y = lateral_offset if k % 2 else -lateral_offset
        steps.append(Step([k * stride, y, foot_z], vro_setpoints[(k - 1) % len(vro_setpoints)], t_step))
    if final_hold > 0:
        steps.append(Step(steps[-1].r_foot, final_hold_phi, final_hold))
    return FootstepPlan(tuple(steps), terminal=terminal)


@dataclass(frozen=True)
class Segment:
    r_vrp: np.ndarray
    xi_l_eos: np.ndarray
    phi_vro: float
    xi_a_eos: float
    t_start: float
    t_end: float


@dataclass(frozen=True)
class ReferenceSample:
    xi_l: np.ndarray
    xi_l_dot: np.ndarray
    xi_a: float
    xi_a_dot: float
    clamped: bool = False


@dataclass(frozen=True)
class ReferenceTrajectory:
    segments: tuple
    b: float
    eta: float

    @property
    def t_start(self) -> float:
        return self.segments[0].t_start

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end

    def segment_index(self, t: float, side: str = "right") -> int:
        """Index of the segment containing ``t``.

        On a boundary ``side="right"`` picks the later segment and
        ``side="left"`` the earlier one.
        """
        starts = [seg.t_start for seg in self.segments]
        if side == "right":
            i = bisect.bisect_right(starts, t) - 1
        else:
            i = bisect.bisect_left(starts, t) - 1
        return min(max(i, 0), len(self.segments) - 1)

    def evaluate(self, t: float, index: Optional[int] = None) -> ReferenceSample:
        """Evaluate segment ``index`` (default: the one containing ``t``) at ``t``.

        No range check; ``index`` lets callers pin the segment across a
        whole integration step.
        """
        seg = self.segments[self.segment_index(t) if index is None else index]
        el = math.exp((t - seg.t_end) / self.b)
        ea = math.exp((t - seg.t_end) / self.eta)
        dl = el * (seg.xi_l_eos - seg.r_vrp)
        da = ea * (seg.xi_a_eos - seg.phi_vro)
        return ReferenceSample(seg.r_vrp + dl, dl / self.b, seg.phi_vro + da, da / self.eta)


def _chain(setpoints, durations, kappa: float, terminal):
    """Backward keypoint recursion for one channel; returns end-of-step values."""
    eos = [None] * len(setpoints)
    eos[-1] = terminal
    for i in range(len(setpoints) - 1, 0, -1):
        eos[i - 1] = setpoints[i] + math.exp(-durations[i] / kappa) * (eos[i] - setpoints[i])
    return eos


def _periodic_terminal(setpoints, durations, kappa: float, shift):
    # xi_start = A * xi_term + c is affine in the terminal value; impose
    # xi_term = xi_start + shift and solve.
    zero = setpoints[0] * 0.0
    eos0 = _chain(setpoints, durations, kappa, zero)
    c = setpoints[0] + math.exp(-durations[0] / kappa) * (eos0[0] - setpoints[0])
    a = math.exp(-sum(durations) / kappa)
    return (c + shift) / (1.0 - a)


def backward_recursion(plan: FootstepPlan, params: PlannerParams, terminal_xi_l=None,
                       terminal_xi_a: Optional[float] = None) -> ReferenceTrajectory:
    """Desired linear and angular DCM trajectories for ``plan``.

    VRPs sit ``b**2 * g`` above each foot. Missing terminal values follow
    ``plan.terminal``.
    """
    if not plan.steps:
        raise PlanError("empty plan")
    vrps = [vrp_from_ecmp(s.r_foot, params.b, params.g) for s in plan.steps]
    phis = [s.phi_vro for s in plan.steps]
    bounds = plan.boundaries
    # durations from the boundary grid so segment evaluation and recursion agree
    durations = [float(bounds[i + 1] - bounds[i]) for i in range(len(plan.steps))]

    if terminal_xi_l is None:
        if plan.terminal == "rest":
            terminal_xi_l = vrps[-1]
        else:
            shift = plan.period_shift
            if shift is None:
                n = len(plan.steps)
                shift = (plan.steps[-1].r_foot - plan.steps[0].r_foot) * n / max(n - 1, 1)
            terminal_xi_l = _periodic_terminal(vrps, durations, params.b, shift)
    if terminal_xi_a is None:
        if plan.terminal == "rest":
            terminal_xi_a = phis[-1]
        else:
            terminal_xi_a = _periodic_terminal(phis, durations, params.eta, 0.0)

    eos_l = _chain(vrps, durations, params.b, np.asarray(terminal_xi_l, dtype=float).reshape(3))
    eos_a = _chain(phis, durations, params.eta, float(terminal_xi_a))
    segments = tuple(
        Segment(vrps[i], eos_l[i], phis[i], float(eos_a[i]), float(bounds[i]), float(bounds[i + 1]))
        for i in range(len(plan.steps))
    )
    return ReferenceTrajectory(segments, params.b, params.eta)


def setpoint_reference(plan: FootstepPlan, params: PlannerParams) -> ReferenceTrajectory:
    """Piecewise-constant reference: each segment's desired DCM is its own
    VRP / VRO setpoint with zero derivative."""
    bounds = plan.boundaries
    segments = []
    for i, s in enumerate(plan.steps):
        vrp = vrp_from_ecmp(s.r_foot, params.b, params.g)
        segments.append(Segment(vrp, vrp, s.phi_vro, s.phi_vro, float(bounds[i]), float(bounds[i + 1])))
    return ReferenceTrajectory(tuple(segments), params.b, params.eta)


def sample_reference(traj: ReferenceTrajectory, t: float, out_of_range: str = "clamp",
                     side: str = "right") -> ReferenceSample:
    """Desired DCMs and their analytic time derivatives at ``t``.

    Outside ``[t_start, t_end]`` either raise (``out_of_range="raise"``) or
    return the boundary value with zero derivative and ``clamped=True``.
    """
    tol = 1e-12 * max(1.0, abs(traj.t_end))
    if traj.t_start - tol <= t <= traj.t_end + tol:
        return traj.evaluate(t, traj.segment_index(t, side))
    if out_of_range == "raise":
        raise ValueError(f"t={t} outside reference range [{traj.t_start}, {traj.t_end}]")
    if out_of_range != "clamp":
        raise ValueError(f"unknown out_of_range mode {out_of_range!r}")
    edge = traj.t_start if t < traj.t_start else traj.t_end
    s = traj.evaluate(edge, 0 if t < traj.t_start else len(traj.segments) - 1)
    return ReferenceSample(s.xi_l, np.zeros(3), s.xi_a, 0.0, clamped=True)
