"""
The angular DCM and the virtual repellent orientation
=====================================================

Pitch is treated like a second inverted pendulum: the angular DCM
``xi_a = theta + eta * thetadot`` is pushed away from a virtual repellent
orientation ``phi_vro``, and choosing the torque ``tau = gamma (theta - phi_vro)``
with ``gamma = I / eta**2`` makes the angular DCM obey ``xi_a' = (xi_a - phi_vro) / eta``
regardless of theta.
"""

import math

import numpy as np

from spatial_dcm.core_model import PlannerParams, angular_dcm, vro_torque
from spatial_dcm.simulator import open_loop_response

p = PlannerParams(m=65.1, I=2.3, eta=0.22)
print(f"b = {p.b:.4f} s, eta = {p.eta:.3f} s, s = {p.s:.1f} kg/s^2, gamma = {p.gamma:.2f} N m/rad")

# %%
# The decoupling identity at a random state: the theta term cancels.
rng = np.random.default_rng(0)
theta, thetadot, phi = rng.uniform(-1, 1, 3)
xi = angular_dcm(theta, thetadot, p.eta)
tau = vro_torque(theta, phi, p.gamma)
print(f"xi_a' from the dynamics: {thetadot + p.eta * tau / p.I:+.15f}")
print(f"(xi_a - phi_vro) / eta:  {(xi - phi) / p.eta:+.15f}")

# %%
# Held at a constant VRO, the angular DCM runs away from it exponentially:
# this is the unstable root ``+1/eta`` that feedback has to remove.
t = np.linspace(0, 1.0, 6)
_, xi_a = open_loop_response(p, [0, 0, p.h, math.pi / 6 + 1e-3], [0, 0, p.h], math.pi / 6, t)
for tk, e in zip(t, xi_a - math.pi / 6):
    print(f"t = {tk:.1f} s   xi_a - phi_vro = {e:.3e} rad")
