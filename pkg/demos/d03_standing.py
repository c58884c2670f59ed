"""
Standing pitch switching
========================

The robot stands still while the pitch setpoint switches between +pi/8 and
-pi/8 every second for five setpoints, then returns to zero. Each switch asks
for a large torque; the CoP constraint clips it at the 12 cm boundary and the
remainder is produced by shifting the eCMP.
"""

import math

import numpy as np

from _plotting import save
from spatial_dcm.config import load_scenario
from spatial_dcm.simulator import run_scenario

log = run_scenario(load_scenario("standing_pi8").sim)
s = log.summary()

for i, step in enumerate(log.plan.steps):
    rows = log.segment == i
    miss = np.min(np.abs(log.theta[rows] - step.phi_vro))
    print(f"setpoint {i}: {step.phi_vro / math.pi:+.3f} pi rad, closest approach {miss:.2e} rad, "
          f"settles (1e-2) after {s['settling_times'][i]:.3f} s")
print(f"final theta {s['final_theta']:.2e} rad; {s['constraint_activations']} saturation episodes, "
      f"{s['constraint_active_ticks']} ticks")


def figure(plt):
    fig, ax = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax[0].plot(log.t, log.theta, label="theta")
    ax[0].step(log.t, [log.plan.steps[k].phi_vro for k in log.segment], where="post", ls="--", label="setpoint")
    ax[1].plot(log.t, log.r_cop_exact * 100, label="requested CoP (cm)")
    ax[1].plot(log.t, log.r_cop * 100, label="applied CoP (cm)")
    ax[1].set_xlabel("t [s]")
    for a in ax:
        a.legend(loc="upper right", fontsize=8)
    return fig


save(figure, "standing_pi8")
