"""DCM tracking laws, per-tick wrench assembly and state-space analysis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cop
from .core_model import (ParameterError, PlannerParams, SpatialState, WrenchCommand, ecmp_force,
                         ecmp_from_vrp, pitch_cross_term, vro_torque, vrp_from_ecmp)

from .reference import ReferenceSample

_ZERO3 = np.zeros(3)


def linear_tracking_law(xi_l, xi_l_d, xi_l_dot_d, params: PlannerParams) -> np.ndarray:
    """VRP that makes the linear DCM error decay at rate ``k_l``."""
    xi_l = np.asarray(xi_l, dtype=float)
    b = params.b
    return xi_l + params.k_l * b * (xi_l - np.asarray(xi_l_d, dtype=float)) - b * np.asarray(xi_l_dot_d, dtype=float)


def angular_tracking_law(xi_a: float, xi_a_d: float, xi_a_dot_d: float, params: PlannerParams) -> float:
    """VRO that makes the angular DCM error decay at rate ``k_a``."""
    eta = params.eta
    return xi_a + params.k_a * eta * (xi_a - xi_a_d) - eta * xi_a_dot_d


def control_tick(state: SpatialState, reference: ReferenceSample, stance_foot, params: PlannerParams,
                 cop_constraint: bool = True, feedforward: bool = True) -> WrenchCommand:
    """One controller evaluation: tracking laws, encodings, CoP resolution.

    With ``feedforward=False`` the reference derivatives are ignored.
    """
    return wrench_command(state.x, state.xdot, state.theta, state.thetadot, reference, stance_foot,
                          params, cop_constraint, feedforward)


def wrench_command(x, xdot, theta, thetadot, reference: ReferenceSample, stance_foot, params: PlannerParams,
                   cop_constraint: bool = True, feedforward: bool = True) -> WrenchCommand:
    """:func:`control_tick` on raw state components (no state validation)."""
    tau_req, tau, tau_bar, r_ecmp, r_ecmp_applied, phi_vro, r_cop, saturated, f_ext = _resolve_wrench(
        x, xdot, theta, thetadot, reference, params, cop_constraint, feedforward)
    r_cop_exact = -tau / f_ext[2] if f_ext[2] > 0 else r_cop
    return WrenchCommand(
        f_ext=f_ext, tau_ext=tau, r_ecmp=r_ecmp_applied,
        r_vrp=vrp_from_ecmp(r_ecmp_applied, params.b, params.g), phi_vro=phi_vro, r_cop=r_cop,
        tau_requested=tau_req, tau_bar=tau_bar, saturated=saturated, r_ecmp_nominal=r_ecmp,
        r_cop_exact=r_cop_exact, contact_moment=pitch_cross_term(x, stance_foot, f_ext),
    )


def _resolve_wrench(x, xdot, theta, thetadot, reference, params, cop_constraint, feedforward, branch=None):
    xi_l = x + params.b * xdot
    xi_a = theta + params.eta * thetadot
    xi_l_dot_d = reference.xi_l_dot if feedforward else _ZERO3
    xi_a_dot_d = reference.xi_a_dot if feedforward else 0.0

    r_vrp = linear_tracking_law(xi_l, reference.xi_l, xi_l_dot_d, params)
    r_ecmp = ecmp_from_vrp(r_vrp, params.b, params.g)
    phi_vro = angular_tracking_law(xi_a, reference.xi_a, xi_a_dot_d, params)
    tau_req = vro_torque(theta, phi_vro, params.gamma)

    if cop_constraint:
        bounds = cop.SupportBounds(params.r_cop_thres)
        if branch is None:
            res = cop.resolve(tau_req, r_ecmp, bounds, params.m, params.g)
        else:
            res = cop.resolve_on_branch(tau_req, r_ecmp, bounds, params.m, params.g, branch)
        tau, tau_bar, r_ecmp_applied, r_cop, saturated = res.tau_ext, res.tau_bar, res.r_ecmp, res.r_cop, res.saturated
    else:
        tau, tau_bar, r_ecmp_applied, saturated = tau_req, 0.0, r_ecmp, False
        r_cop = cop.cop_from_torque(tau, params.m, params.g)
    f_ext = ecmp_force(x, r_ecmp_applied, params.s)
    return tau_req, tau, tau_bar, r_ecmp, r_ecmp_applied, phi_vro, r_cop, saturated, f_ext


def applied_wrench(x, xdot, theta, thetadot, reference: ReferenceSample, params: PlannerParams,
                   cop_constraint: bool = True, feedforward: bool = True,
                   branch: Optional[int] = None) -> tuple[np.ndarray, float]:
    """Only ``(f_ext, tau_ext)`` of :func:`wrench_command`; used inside integrator stages.

    ``branch`` pins the saturation state (see :func:`cop.resolve_on_branch`).
    """
    out = _resolve_wrench(x, xdot, theta, thetadot, reference, params, cop_constraint, feedforward, branch)
    return out[8], out[1]


def requested_torque(x, xdot, theta, thetadot, reference: ReferenceSample, params: PlannerParams,
                     feedforward: bool = True) -> float:
    """Pitch torque asked for by the angular tracking law, before saturation."""
    xi_a = theta + params.eta * thetadot
    phi_vro = angular_tracking_law(xi_a, reference.xi_a, reference.xi_a_dot if feedforward else 0.0, params)
    return vro_torque(theta, phi_vro, params.gamma)


@dataclass(frozen=True)
class _StateSpace:
    """``A``/``B`` act on the DCM state ``[xi_l(3), xi_a]``; ``A_full``/``B_full``
    on the stacked body + DCM state ``[x(3), xi_l(3), theta, xi_a]``."""

    A: np.ndarray
    B: np.ndarray
    A_full: np.ndarray
    B_full: np.ndarray
    eigenvalues: np.ndarray
    dcm_eigenvalues: np.ndarray


class ClosedLoopSystem(_StateSpace):
    """Inputs are ``[xi_l_d(3), xi_l_dot_d(3), xi_a_d, xi_a_dot_d]``."""

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))


class OpenLoopSystem(_StateSpace):
    """Inputs are ``[r_vrp(3), phi_vro]``."""

    @property
    def unstable(self) -> bool:
        return bool(np.any(self.eigenvalues.real > 0))

    @property
    def unstable_roots(self) -> np.ndarray:
        ev = self.eigenvalues.real
        return np.sort(ev[ev > 0])


def _body_rows(params: PlannerParams, A: np.ndarray):
    # x_dot = (xi_l - x)/b and theta_dot = (xi_a - theta)/eta, from the DCM definitions
    ib, ie = 1.0 / params.b, 1.0 / params.eta
    for i in range(3):
        A[i, i] = -ib
        A[i, 3 + i] = ib
    A[6, 6] = -ie
    A[6, 7] = ie


def closed_loop_matrices(params: PlannerParams) -> ClosedLoopSystem:
    if not (params.k_l > 0 and params.k_a > 0):
        raise ParameterError("k must be positive")
    k_l, k_a = params.k_l, params.k_a
    A = np.diag([-k_l, -k_l, -k_l, -k_a])
    B = np.zeros((4, 8))
    B[0:3, 0:3] = k_l * np.eye(3)
    B[0:3, 3:6] = np.eye(3)
    B[3, 6] = k_a
    B[3, 7] = 1.0

    A_full = np.zeros((8, 8))
    _body_rows(params, A_full)
    idx = [3, 4, 5, 7]
    A_full[np.ix_(idx, idx)] = A
    B_full = np.zeros((8, 8))
    B_full[idx, :] = B
    return ClosedLoopSystem(A, B, A_full, B_full, np.linalg.eigvals(A_full), np.linalg.eigvals(A))


def open_loop_matrices(params: PlannerParams) -> OpenLoopSystem:
    ib, ie = 1.0 / params.b, 1.0 / params.eta
    A = np.diag([ib, ib, ib, ie])
    B = np.diag([-ib, -ib, -ib, -ie])
    A_full = np.zeros((8, 8))
    _body_rows(params, A_full)
    idx = [3, 4, 5, 7]
    A_full[np.ix_(idx, idx)] = A
    B_full = np.zeros((8, 4))
    B_full[idx, :] = B
    return OpenLoopSystem(A, B, A_full, B_full, np.linalg.eigvals(A_full), np.linalg.eigvals(A))
