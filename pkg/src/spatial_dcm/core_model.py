"""Constrained single rigid body model and the eCMP / VRP / VRO encodings.

The body translates freely in 3D and rotates about the pitch (y) axis only.
Gravity is ``[0, 0, g]`` with ``g > 0`` and is subtracted from the linear
acceleration (z up).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PITCH_AXIS = 1


class ParameterError(ValueError):
    """Raised for physically meaningless parameters (non-positive masses, gains...)."""


def derive_constants(m: float, g: float, h: float, I: float, eta: float) -> tuple[float, float, float]:
    """Return the DCM time constant ``b`` and the encoding constants ``s``, ``gamma``.

    ``b = sqrt(h/g)``, ``s = m/b**2`` and ``gamma = I/eta**2``; these choices
    cancel the body-state terms in the linear and angular DCM dynamics.
    """
    for name, value in (("m", m), ("g", g), ("h", h), ("I", I), ("eta", eta)):
        if not (math.isfinite(value) and value > 0):
            raise ParameterError(f"{name} must be positive and finite, got {value!r}")
    b = math.sqrt(h / g)
    s = m / b**2
    gamma = I / eta**2
    return b, s, gamma


@dataclass(frozen=True)
class PlannerParams:
    """Physical parameters, time constants and gains.

    ``eta`` defaults to ``b`` so both channels share a time constant.
    ``b``, ``s`` and ``gamma`` are derived and cannot be passed in.
    """

    m: float
    I: float
    g: float = 9.81
    h: float = 0.981
    eta: Optional[float] = None
    k_l: float = 3.0
    k_a: float = 3.0
    r_cop_thres: float = 0.12
    b: float = field(init=False)
    s: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0 and math.isfinite(self.g) and self.g > 0):
            raise ParameterError(f"h and g must be positive, got h={self.h!r}, g={self.g!r}")
        eta = math.sqrt(self.h / self.g) if self.eta is None else float(self.eta)
        b, s, gamma = derive_constants(self.m, self.g, self.h, self.I, eta)
        for name in ("k_l", "k_a"):
            k = getattr(self, name)
            if not (math.isfinite(k) and k > 0):
                raise ParameterError(f"{name} must be positive (k must be positive for a stable closed loop), got {k!r}")
        if not (math.isfinite(self.r_cop_thres) and self.r_cop_thres > 0):
            raise ParameterError(f"r_cop_thres must be positive, got {self.r_cop_thres!r}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "gamma", gamma)

    @property
    def gravity(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.g])

    @property
    def weight(self) -> float:
        return self.m * self.g

    def replace(self, **changes) -> "PlannerParams":
        """Copy with some inputs changed; the derived constants are recomputed."""
        kwargs = dict(m=self.m, I=self.I, g=self.g, h=self.h, eta=self.eta,
                      k_l=self.k_l, k_a=self.k_a, r_cop_thres=self.r_cop_thres)
        kwargs.update(changes)
        return PlannerParams(**kwargs)


@dataclass(frozen=True)
class SpatialState:
    """CoM position/velocity and pitch angle/rate at time ``t``."""

    x: np.ndarray
    xdot: np.ndarray
    theta: float
    thetadot: float
    t: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(3)
        xdot = np.asarray(self.xdot, dtype=float).reshape(3)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xdot", xdot)
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "thetadot", float(self.thetadot))
        object.__setattr__(self, "t", float(self.t))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xdot))
                and math.isfinite(self.theta) and math.isfinite(self.thetadot)):
            raise ValueError("SpatialState entries must be finite")

    def as_vector(self) -> np.ndarray:
        """Pack as ``[x(3), xdot(3), theta, thetadot]``."""
        return np.concatenate([self.x, self.xdot, [self.theta, self.thetadot]])

    @classmethod
    def from_vector(cls, y, t: float = 0.0) -> "SpatialState":
        y = np.asarray(y, dtype=float)
        return cls(x=y[0:3], xdot=y[3:6], theta=y[6], thetadot=y[7], t=t)

    def xi_l(self, b: float) -> np.ndarray:
        return linear_dcm(self.x, self.xdot, b)

    def xi_a(self, eta: float) -> float:
        return angular_dcm(self.theta, self.thetadot, eta)


@dataclass(frozen=True)
class WrenchCommand:
    """Output of one controller evaluation.

    ``r_ecmp``/``r_vrp`` and ``f_ext`` are the values actually applied, i.e.
    after CoP constraint resolution. ``tau_requested`` and ``r_ecmp_nominal``
    hold the values the tracking laws asked for. ``r_cop`` is the offset along
    x relative to the stance foot computed with the ``m*g`` approximation;
    ``r_cop_exact`` uses the instantaneous vertical force instead.
    ``contact_moment`` is the pitch moment of ``f_ext`` about the CoM when it
    acts at the stance foot.
    """

    f_ext: np.ndarray
    tau_ext: float
    r_ecmp: np.ndarray
    r_vrp: np.ndarray
    phi_vro: float
    r_cop: float
    tau_requested: float = 0.0
    tau_bar: float = 0.0
    saturated: bool = False
    r_ecmp_nominal: Optional[np.ndarray] = None
    r_cop_exact: float = 0.0
    contact_moment: float = 0.0


def linear_dcm(x, xdot, b: float) -> np.ndarray:
    """``xi_l = x + b * xdot``."""
    if not b > 0:
        raise ParameterError(f"b must be positive, got {b!r}")
    return np.asarray(x, dtype=float) + b * np.asarray(xdot, dtype=float)


def angular_dcm(theta: float, thetadot: float, eta: float) -> float:
    """``xi_a = theta + eta * thetadot``."""
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta!r}")
    return theta + eta * thetadot


def ecmp_force(x, r_ecmp, s: float) -> np.ndarray:
    """External force encoded by the eCMP: ``s * (x - r_ecmp)``."""
    return s * (np.asarray(x, dtype=float) - np.asarray(r_ecmp, dtype=float))


def vro_torque(theta: float, phi_vro: float, gamma: float) -> float:
    """Pitch torque encoded by the VRO: ``gamma * (theta - phi_vro)``."""
    return gamma * (theta - phi_vro)


def _vertical_offset(b: float, g: float) -> np.ndarray:
    if not b > 0:
        raise ParameterError(f"b must be positive, got {b!r}")
    return np.array([0.0, 0.0, b * b * g])


def vrp_from_ecmp(r_ecmp, b: float, g: float) -> np.ndarray:
    return np.asarray(r_ecmp, dtype=float) + _vertical_offset(b, g)


def ecmp_from_vrp(r_vrp, b: float, g: float) -> np.ndarray:
    return np.asarray(r_vrp, dtype=float) - _vertical_offset(b, g)


def pitch_cross_term(x, r_foot, f_ext) -> float:
    """Pitch component of ``(r_foot - x) x f_ext``, the moment of the
    contact force about the CoM."""
    r = np.asarray(r_foot, dtype=float) - np.asarray(x, dtype=float)
    f = np.asarray(f_ext, dtype=float)
    # y row of the cross product only
    return float(r[2] * f[0] - r[0] * f[2])


def constrained_dynamics(state: SpatialState, f_ext, tau_ext: float, r_foot,
                         params: PlannerParams) -> tuple[np.ndarray, float]:
    """Accelerations of the pitch-constrained SRBM.

    Returns ``(xddot, thetaddot)`` with ``xddot = f/m - g`` and
    ``I * thetaddot = S[(r_foot - x) x f] + tau``.
    """
    f = np.asarray(f_ext, dtype=float)
    xddot = f / params.m - params.gravity
    thetaddot = (pitch_cross_term(state.x, r_foot, f) + tau_ext) / params.I
    return xddot, thetaddot
