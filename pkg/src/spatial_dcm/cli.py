"""``spatial-dcm`` command line: run scenarios, analyze gains, list bundled scenarios.

Exit codes: 0 success, 2 invalid configuration or usage, 3 simulation diverged.
The default output directory is ``$SPATIAL_DCM_OUT_DIR/<scenario>`` (``./runs/<scenario>``
when the variable is unset).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, bundled_scenarios, load_scenario
from .controller import closed_loop_matrices
from .core_model import ParameterError
from .export import analysis_report, write_outputs
from .simulator import DivergenceError, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
OUT_DIR_ENV = "SPATIAL_DCM_OUT_DIR"


def _add_overrides(p: argparse.ArgumentParser):
    p.add_argument("--k-l", type=float, help="linear tracking gain")
    p.add_argument("--k-a", type=float, help="angular tracking gain")
    p.add_argument("--eta", type=float, help="angular DCM time constant")
    p.add_argument("--r-cop-thres", type=float, help="CoP half-length of the support polygon")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spatial-dcm", description="Spatial DCM planner / simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write logs")
    run.add_argument("config", help="scenario file or bundled scenario name")
    run.add_argument("--out-dir", type=Path)
    run.add_argument("--dt", type=float)
    run.add_argument("--control-rate", type=float)
    run.add_argument("--control-mode", choices=["zoh", "continuous"])
    run.add_argument("--reference-mode", choices=["recursion", "setpoints"])
    run.add_argument("--cop-constraint", dest="cop_constraint", action="store_true", default=None)
    run.add_argument("--no-cop-constraint", dest="cop_constraint", action="store_false")
    run.add_argument("--feedforward", dest="feedforward", action="store_true", default=None)
    run.add_argument("--no-feedforward", dest="feedforward", action="store_false")
    run.add_argument("--plot-data", action="store_true", default=None)
    _add_overrides(run)

    an = sub.add_parser("analyze", help="print derived constants and closed-loop eigenstructure")
    an.add_argument("config")
    an.add_argument("--json", action="store_true", help="machine-readable output")
    an.add_argument("--export-matrices", type=Path, metavar="DIR",
                    help="write the stacked closed-loop A and B matrices as CSV")
    _add_overrides(an)

    sub.add_parser("list-scenarios", help="list bundled scenarios")
    return ap


def _overrides(args) -> dict:
    o = {"params.k_l": args.k_l, "params.k_a": args.k_a, "params.eta": args.eta,
         "params.r_cop_thres": args.r_cop_thres}
    if args.command == "run":
        o.update({"sim.dt": args.dt, "sim.control_rate": args.control_rate,
                  "sim.control_mode": args.control_mode, "sim.reference_mode": args.reference_mode,
                  "sim.cop_constraint": args.cop_constraint, "sim.feedforward": args.feedforward,
                  "output.plot_data": args.plot_data})
    return o


def cmd_run(args) -> int:
    sc = load_scenario(args.config, _overrides(args))
    out_dir = args.out_dir or Path(os.environ.get(OUT_DIR_ENV, "runs")) / sc.name
    status, code = "ok", EXIT_OK
    try:
        log = run_scenario(sc.sim)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        log, status, code = exc.log, "diverged", EXIT_DIVERGED
    written = write_outputs(out_dir, sc.name, log, sc.output.csv, sc.output.summary,
                            sc.output.plot_data, status)
    s = log.summary()
    print(f"{sc.name}: {status}, {s['rows']} rows over {s['duration']:.6g} s, "
          f"peak |r_cop| = {s['peak_abs_r_cop']:.4g} m (bound {s['r_cop_thres']:.4g} m), "
          f"{s['constraint_activations']} constraint activations")
    for path in written:
        print(f"  wrote {path}")
    return code


def cmd_analyze(args) -> int:
    sc = load_scenario(args.config, _overrides(args))
    rep = analysis_report(sc.sim.params)
    if args.export_matrices:
        cl = closed_loop_matrices(sc.sim.params)
        args.export_matrices.mkdir(parents=True, exist_ok=True)
        np.savetxt(args.export_matrices / "closed_loop_A.csv", cl.A_full, fmt="%.17g", delimiter=",")
        np.savetxt(args.export_matrices / "closed_loop_B.csv", cl.B_full, fmt="%.17g", delimiter=",")
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
        return EXIT_OK
    c = rep["constants"]
    print(f"scenario {sc.name}")
    print(f"  b = {c['b']:.6g} s, s = {c['s']:.6g} kg/s^2, gamma = {c['gamma']:.6g} N m/rad, eta = {c['eta']:.6g} s")
    print("  closed-loop eigenvalues: " + ", ".join(f"{v:.6g}" for v in rep["closed_loop_eigenvalues"]))
    print(f"  verdict: {'stable' if rep['stable'] else 'unstable'}")
    print("  open-loop unstable roots: " + ", ".join(f"{v:.6g}" for v in rep["open_loop_unstable_roots"]))
    return EXIT_OK


def cmd_list(args) -> int:
    for name, desc in bundled_scenarios().items():
        print(f"{name:16s} {desc}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"run": cmd_run, "analyze": cmd_analyze, "list-scenarios": cmd_list}
    try:
        return handlers[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
