"""
Forward walking with alternating pitch setpoints
================================================

Four 1 s steps at 0.25 m/s while the torso pitch setpoint alternates between
+pi/6 and -pi/6. The reference comes from a backward recursion over the
footstep plan, the controller runs at 1 kHz, and the CoP implied by the pitch
torque is compared with the 12 cm support half-length.
"""

import numpy as np

from _plotting import save
from spatial_dcm.config import load_scenario
from spatial_dcm.simulator import run_scenario

scenario = load_scenario("walking_pi6")
log = run_scenario(scenario.sim)
summary = log.summary()

print(scenario.description)
print(f"peak |r_cop| = {summary['peak_abs_r_cop'] * 100:.2f} cm (support boundary +/- "
      f"{summary['r_cop_thres'] * 100:.0f} cm), saturated ticks: {summary['constraint_active_ticks']}")
print(f"max linear DCM tracking error {summary['max_linear_tracking_error']:.2e} m")
mg = log.params.m * log.params.g
print(f"largest relative deviation of the vertical force from body weight: {np.max(np.abs(log.f_ext[:, 2] / mg - 1)):.1e}")


def figure(plt):
    fig, ax = plt.subplots(3, 1, figsize=(7, 7), sharex=True)
    ax[0].plot(log.t, log.x[:, 0], label="CoM x")
    ax[0].plot(log.t, log.xi_l_d[:, 0], "--", label="desired DCM x")
    ax[0].plot(log.t, log.r_foot[:, 0], ":", label="stance foot")
    ax[1].plot(log.t, log.theta, label="theta")
    ax[1].plot(log.t, log.xi_a_d, "--", label="desired angular DCM")
    ax[2].plot(log.t, log.r_cop * 100, label="CoP (cm)")
    ax[2].axhline(12, color="k", lw=0.5)
    ax[2].axhline(-12, color="k", lw=0.5)
    ax[2].set_xlabel("t [s]")
    for a in ax:
        a.legend(loc="upper right", fontsize=8)
    return fig


save(figure, "walking_pi6")
