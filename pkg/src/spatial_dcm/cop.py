"""Center-of-pressure feasibility for the pitch channel.

The support polygon is the interval ``[-r_cop_thres, r_cop_thres]`` along x
around the stance foot. A pitch torque ``tau`` applied through the foot moves
the CoP by ``-tau / (m g)``: from ``(p - x) x f`` with ``p = r_foot + c e_x``
the pitch moment gains ``-c f_z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import ParameterError


@dataclass(frozen=True)
class SupportBounds:
    r_cop_thres: float

    def __post_init__(self):
        if not (math.isfinite(self.r_cop_thres) and self.r_cop_thres > 0):
            raise ParameterError(f"r_cop_thres must be positive, got {self.r_cop_thres!r}")


@dataclass(frozen=True)
class ConstraintResult:
    tau_ext: float
    tau_bar: float
    r_ecmp: np.ndarray
    r_cop: float
    saturated: bool


def cop_from_torque(tau_ext: float, m: float, g: float) -> float:
    if not (m > 0 and g > 0):
        raise ParameterError("m and g must be positive")
    return -tau_ext / (m * g)


def saturate_torque(tau_ext_requested: float, bounds: SupportBounds, m: float, g: float) -> tuple[float, float]:
    """Split the requested torque into the largest feasible part and the rest.

    Returns ``(tau_ext_max, tau_bar)`` with their sum equal to the request.
    """
    limit = m * g * bounds.r_cop_thres
    # compare against the product, not the quotient, so a saturated value
    # is itself feasible (idempotence)
    if abs(tau_ext_requested) <= limit:
        return tau_ext_requested, 0.0
    tau_max = math.copysign(limit, tau_ext_requested)
    return tau_max, tau_ext_requested - tau_max


def augment_ecmp(r_ecmp, tau_bar_x: float, tau_bar_y: float, m: float, g: float) -> np.ndarray:
    """Shift the eCMP so the force channel produces the residual torque."""
    return np.asarray(r_ecmp, dtype=float) + np.array([tau_bar_y, -tau_bar_x, 0.0]) / (m * g)


def resolve(tau_requested: float, r_ecmp, bounds: SupportBounds, m: float, g: float) -> ConstraintResult:
    """Saturate a pitch torque request and move its excess into the eCMP.

    Pitch is rotation about y, so the residual enters as ``tau_bar_y``.
    """
    tau, tau_bar = saturate_torque(tau_requested, bounds, m, g)
    if tau_bar == 0.0:
        return ConstraintResult(tau, 0.0, np.asarray(r_ecmp, dtype=float), cop_from_torque(tau, m, g), False)
    r_star = augment_ecmp(r_ecmp, 0.0, tau_bar, m, g)
    # exact boundary value; -tau_max/(m g) can be off by an ulp
    r_cop = -math.copysign(bounds.r_cop_thres, tau)
    return ConstraintResult(tau, tau_bar, r_star, r_cop, True)


def saturation_branch(tau_requested: float, bounds: SupportBounds, m: float, g: float) -> int:
    """``+1``/``-1`` when the request saturates at the upper/lower limit, else ``0``."""
    if abs(tau_requested) <= m * g * bounds.r_cop_thres:
        return 0
    return 1 if tau_requested > 0 else -1


def resolve_on_branch(tau_requested: float, r_ecmp, bounds: SupportBounds, m: float, g: float,
                      branch: int) -> ConstraintResult:
    """:func:`resolve` with the saturation state fixed to ``branch``.

    Each branch is a smooth (affine) function of the request, so an
    integrator can stay on one branch up to a located switching time.
    """
    if branch == 0:
        return ConstraintResult(tau_requested, 0.0, np.asarray(r_ecmp, dtype=float),
                                cop_from_torque(tau_requested, m, g), False)
    tau = branch * m * g * bounds.r_cop_thres
    tau_bar = tau_requested - tau
    return ConstraintResult(tau, tau_bar, augment_ecmp(r_ecmp, 0.0, tau_bar, m, g),
                            -branch * bounds.r_cop_thres, True)
