"""Trajectory CSV, plot-data files and summary reports."""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .controller import closed_loop_matrices, open_loop_matrices
from .core_model import PlannerParams
from .simulator import TrajectoryLog

CSV_SCHEMA_VERSION = 1

_XYZ = ("x", "y", "z")


def _vec(name):
    return [f"{name}_{a}" for a in _XYZ]


CSV_COLUMNS = tuple(
    ["t"] + _vec("x") + _vec("xdot") + ["theta", "thetadot"] + _vec("xi_l") + ["xi_a"]
    + _vec("xi_l_d") + _vec("xi_l_dot_d") + ["xi_a_d", "xi_a_dot_d"]
    + _vec("f_ext") + ["tau_ext"] + _vec("r_ecmp") + _vec("r_vrp") + ["phi_vro", "r_cop"]
    + ["tau_requested", "tau_bar", "saturated", "r_cop_exact", "angular_momentum"] + _vec("r_foot") + ["segment"]
)

PLOT_SIGNALS = ("theta", "xi_a", "xi_a_d", "phi_vro", "r_cop", "tau_ext", "angular_momentum",
                "x_x", "xi_l_x", "xi_l_d_x", "r_vrp_x", "f_ext_z")


def log_table(log: TrajectoryLog) -> np.ndarray:
    """Rows of the trajectory CSV in :data:`CSV_COLUMNS` order."""
    cols = [log.t[:, None], log.x, log.xdot, log.theta[:, None], log.thetadot[:, None], log.xi_l,
            log.xi_a[:, None], log.xi_l_d, log.xi_l_dot_d, log.xi_a_d[:, None], log.xi_a_dot_d[:, None],
            log.f_ext, log.tau_ext[:, None], log.r_ecmp, log.r_vrp, log.phi_vro[:, None], log.r_cop[:, None],
            log.tau_requested[:, None], log.tau_bar[:, None], log.saturated.astype(float)[:, None],
            log.r_cop_exact[:, None], log.angular_momentum[:, None], log.r_foot,
            log.segment.astype(float)[:, None]]
    table = np.hstack(cols)
    assert table.shape[1] == len(CSV_COLUMNS)
    return table


def csv_text(log: TrajectoryLog) -> str:
    buf = io.StringIO()
    np.savetxt(buf, log_table(log), fmt="%.17g", delimiter=",", header=",".join(CSV_COLUMNS), comments="")
    return buf.getvalue()


def read_csv(path) -> dict:
    """Column name -> array, for a CSV written by :func:`csv_text`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def plot_data_files(log: TrajectoryLog) -> dict:
    """File name -> two-column ``t value`` text, one file per signal in :data:`PLOT_SIGNALS`."""
    table = log_table(log)
    out = {}
    for name in PLOT_SIGNALS:
        col = table[:, CSV_COLUMNS.index(name)]
        buf = io.StringIO()
        np.savetxt(buf, np.column_stack([log.t, col]), fmt="%.17g", header=f"t {name}")
        out[f"{name}.dat"] = buf.getvalue()
    return out


def analysis_report(params: PlannerParams) -> dict:
    cl = closed_loop_matrices(params)
    ol = open_loop_matrices(params)
    return {
        "constants": {"b": params.b, "s": params.s, "gamma": params.gamma, "eta": params.eta},
        "closed_loop_eigenvalues": sorted(float(v) for v in cl.eigenvalues.real),
        "stable": cl.stable,
        "open_loop_eigenvalues": sorted(float(v) for v in ol.eigenvalues.real),
        "open_loop_unstable_roots": [float(v) for v in ol.unstable_roots],
    }


def summary_report(name: str, log: TrajectoryLog, status: str = "ok") -> dict:
    report = {"scenario": name, "status": status, "csv_schema": CSV_SCHEMA_VERSION}
    report.update(analysis_report(log.params))
    report["trajectory"] = log.summary()
    return report


def write_outputs(out_dir, name: str, log: TrajectoryLog, csv_name="trajectory.csv",
                  summary_name="summary.json", plot_data=False, status="ok") -> list:
    """Write CSV, summary and optionally plot data; returns written paths."""
    out_dir = Path(out_dir)
    files = {csv_name: csv_text(log),
             summary_name: json.dumps(summary_report(name, log, status), indent=2, sort_keys=True) + "\n"}
    if plot_data:
        for fname, text in plot_data_files(log).items():
            files[f"plot/{fname}"] = text
    written = []
    for rel, text in files.items():
        path = out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        written.append(path)
    return written
