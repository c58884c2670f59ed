"""Scenario files: TOML documents describing one simulation run.

Schema version 1::

    schema = 1
    name = "walking_pi6"
    description = "..."

    [params]            # m, I required; g, h, eta, k_l, k_a, r_cop_thres optional
    [plan]              # kind = "walking" (generator arguments) or "explicit"
    [[plan.steps]]      # explicit plans only: r_foot, phi_vro, duration
    [sim]               # dt, control_rate, control_mode, feedforward, cop_constraint,
                        # reference_mode, divergence_position, divergence_angle
    [initial]           # optional: x, xdot, theta, thetadot
    [output]            # csv, summary, plot_data, settle_tol

Angles may be written as numbers or as strings such as ``"pi/6"`` or ``"-pi/8"``.
Unknown keys are rejected with the line they appear on.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core_model import ParameterError, PlannerParams, SpatialState
from .reference import FootstepPlan, PlanError, Step, generate_walking_plan
from .simulator import SimConfig

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema", "name", "description", "params", "plan", "sim", "initial", "output"}
_PARAM_KEYS = {"m", "I", "g", "h", "eta", "k_l", "k_a", "r_cop_thres"}
_WALKING_KEYS = {"kind", "v_x", "t_step", "n_steps", "lateral_offset", "vro_setpoints", "final_hold",
                 "final_hold_phi", "terminal", "foot_z"}
_EXPLICIT_KEYS = {"kind", "terminal", "period_shift", "steps"}
_STEP_KEYS = {"r_foot", "phi_vro", "duration"}
_SIM_KEYS = {"dt", "control_rate", "control_mode", "feedforward", "cop_constraint", "reference_mode",
             "divergence_position", "divergence_angle"}
_INITIAL_KEYS = {"x", "xdot", "theta", "thetadot"}
_OUTPUT_KEYS = {"csv", "summary", "plot_data", "settle_tol"}

_ANGLE_RE = re.compile(r"^\s*([+-])?\s*(\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


class ConfigError(ValueError):
    """Invalid scenario document; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        where = source or "<config>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class OutputOptions:
    csv: str = "trajectory.csv"
    summary: str = "summary.json"
    plot_data: bool = False
    settle_tol: float = 1e-2


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    sim: SimConfig
    description: str = ""
    output: OutputOptions = field(default_factory=OutputOptions)
    source: Optional[str] = None


def parse_angle(value) -> float:
    """Number, or a multiple/fraction of pi written as a string."""
    if isinstance(value, bool):
        raise ValueError(f"not an angle: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _ANGLE_RE.match(value)
        if m:
            sign = -1.0 if m.group(1) == "-" else 1.0
            coef = float(m.group(2)) if m.group(2) else 1.0
            div = float(m.group(3)) if m.group(3) else 1.0
            return sign * coef * math.pi / div
        try:
            return float(value)
        except ValueError:
            pass
    raise ValueError(f"not an angle: {value!r}")


def bundled_scenarios() -> dict:
    """Name -> description of the scenario files shipped with the package."""
    out = {}
    for entry in sorted(resources.files("spatial_dcm.scenarios").iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".toml"):
            doc = tomllib.loads(entry.read_text())
            out[entry.name[:-5]] = doc.get("description", "")
    return out


def scenario_text(name_or_path: Union[str, Path]) -> tuple[str, str]:
    """Return ``(text, source)`` for a bundled scenario name or a file path."""
    p = Path(name_or_path)
    if p.suffix != ".toml" and not p.exists():
        entry = resources.files("spatial_dcm.scenarios").joinpath(f"{name_or_path}.toml")
        if entry.is_file():
            return entry.read_text(), f"<bundled:{name_or_path}>"
        raise ConfigError(f"no such scenario file or bundled scenario: {name_or_path}")
    try:
        return p.read_text(), str(p)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(p)) from exc


def load_scenario(name_or_path: Union[str, Path], overrides: Optional[dict] = None) -> ScenarioConfig:
    """Load and validate a scenario; ``overrides`` maps ``"section.key"`` to values."""
    text, source = scenario_text(name_or_path)
    return parse_scenario(text, source, overrides)


def _line_of(text: str, section: Optional[str], key: str) -> Optional[int]:
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        header = re.match(r"^\[\[?\s*([^\]]+?)\s*\]\]?", line)
        if header:
            current = header.group(1)
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return n
    return None


class _Doc:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def error(self, msg: str, section: Optional[str] = None, key: Optional[str] = None) -> ConfigError:
        line = _line_of(self.text, section, key) if key else None
        if line is None and section:
            line = _line_of_section(self.text, section)
        return ConfigError(msg, line, self.source)

    def check_keys(self, table: dict, allowed: set, section: Optional[str]):
        for key in table:
            if key not in allowed:
                where = f"[{section}]" if section else "top level"
                raise self.error(f"unknown key {key!r} in {where}", section, key)

    def number(self, table: dict, key: str, section: str, default=None, angle=False):
        if key not in table:
            if default is None:
                raise self.error(f"missing required key {key!r}", section)
            return default
        try:
            if angle:
                return parse_angle(table[key])
            value = table[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError
            return float(value)
        except ValueError:
            raise self.error(f"{key!r} must be a number, got {table[key]!r}", section, key) from None

    def vector(self, table: dict, key: str, section: str, default=None):
        if key not in table:
            return default
        v = table[key]
        if not (isinstance(v, list) and len(v) == 3 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
            raise self.error(f"{key!r} must be a list of 3 numbers", section, key)
        return [float(c) for c in v]

    def flag(self, table: dict, key: str, section: str, default: bool):
        v = table.get(key, default)
        if not isinstance(v, bool):
            raise self.error(f"{key!r} must be true or false", section, key)
        return v

    def string(self, table: dict, key: str, section: Optional[str], default: str):
        v = table.get(key, default)
        if not isinstance(v, str):
            raise self.error(f"{key!r} must be a string", section, key)
        return v


def _line_of_section(text: str, section: str) -> Optional[int]:
    for n, raw in enumerate(text.splitlines(), start=1):
        if re.match(rf"^\s*\[\[?\s*{re.escape(section)}\s*\]\]?", raw):
            return n
    return None


def _apply_overrides(doc: dict, overrides: dict):
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, _, key = dotted.rpartition(".")
        table = doc
        for part in filter(None, section.split(".")):
            table = table.setdefault(part, {})
        table[key] = value


def parse_scenario(text: str, source: str = "<config>", overrides: Optional[dict] = None) -> ScenarioConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None, source) from None
    if overrides:
        _apply_overrides(raw, overrides)
    d = _Doc(text, source)
    d.check_keys(raw, _TOP_KEYS, None)
    schema = raw.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise d.error(f"unsupported schema version {schema!r} (expected {SCHEMA_VERSION})", None, "schema")
    for sec in ("params", "plan", "sim", "initial", "output"):
        if sec in raw and not isinstance(raw[sec], dict):
            raise d.error(f"[{sec}] must be a table", None, sec)

    params = _params(d, raw.get("params"))
    plan = _plan(d, raw.get("plan"))
    sim = raw.get("sim", {})
    d.check_keys(sim, _SIM_KEYS, "sim")
    initial = _initial(d, raw.get("initial"))
    out = raw.get("output", {})
    d.check_keys(out, _OUTPUT_KEYS, "output")
    output = OutputOptions(
        csv=d.string(out, "csv", "output", "trajectory.csv"),
        summary=d.string(out, "summary", "output", "summary.json"),
        plot_data=d.flag(out, "plot_data", "output", False),
        settle_tol=d.number(out, "settle_tol", "output", 1e-2),
    )
    try:
        simcfg = SimConfig(
            params=params, plan=plan,
            dt=d.number(sim, "dt", "sim", 1e-3),
            control_rate=d.number(sim, "control_rate", "sim", 1000.0),
            control_mode=d.string(sim, "control_mode", "sim", "zoh"),
            scenario=d.string(raw, "name", None, "custom"),
            initial=initial,
            feedforward=d.flag(sim, "feedforward", "sim", True),
            cop_constraint=d.flag(sim, "cop_constraint", "sim", True),
            reference_mode=d.string(sim, "reference_mode", "sim", "recursion"),
            divergence_position=d.number(sim, "divergence_position", "sim", 100.0),
            divergence_angle=d.number(sim, "divergence_angle", "sim", 10.0),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise d.error(str(exc), "sim") from None
    return ScenarioConfig(name=simcfg.scenario, sim=simcfg, description=d.string(raw, "description", None, ""),
                          output=output, source=source)


def _params(d: _Doc, table) -> PlannerParams:
    if table is None:
        raise d.error("missing [params] section")
    d.check_keys(table, _PARAM_KEYS, "params")
    kwargs = {k: d.number(table, k, "params") for k in ("m", "I")}
    for k in ("g", "h", "eta", "k_l", "k_a", "r_cop_thres"):
        if k in table:
            kwargs[k] = d.number(table, k, "params")
    try:
        return PlannerParams(**kwargs)
    except ParameterError as exc:
        key = str(exc).split()[0].rstrip(":")
        raise d.error(str(exc), "params", key if key in table else None) from None


def _plan(d: _Doc, table) -> FootstepPlan:
    if table is None:
        raise d.error("missing [plan] section")
    kind = d.string(table, "kind", "plan", "walking")
    try:
        if kind == "walking":
            d.check_keys(table, _WALKING_KEYS, "plan")
            n_steps = table.get("n_steps")
            if not isinstance(n_steps, int) or isinstance(n_steps, bool):
                raise d.error("'n_steps' must be an integer", "plan", "n_steps")
            vros = table.get("vro_setpoints", ["pi/6", "-pi/6"])
            if not isinstance(vros, list) or not vros:
                raise d.error("'vro_setpoints' must be a non-empty list", "plan", "vro_setpoints")
            try:
                vros = [parse_angle(v) for v in vros]
            except ValueError as exc:
                raise d.error(str(exc), "plan", "vro_setpoints") from None
            return generate_walking_plan(
                v_x=d.number(table, "v_x", "plan"),
                t_step=d.number(table, "t_step", "plan"),
                n_steps=n_steps,
                lateral_offset=d.number(table, "lateral_offset", "plan", 0.0),
                vro_setpoints=vros,
                final_hold=d.number(table, "final_hold", "plan", 0.0),
                final_hold_phi=d.number(table, "final_hold_phi", "plan", 0.0, angle=True),
                terminal=d.string(table, "terminal", "plan", "rest"),
                foot_z=d.number(table, "foot_z", "plan", 0.0),
            )
        if kind == "explicit":
            d.check_keys(table, _EXPLICIT_KEYS, "plan")
            steps_raw = table.get("steps")
            if not isinstance(steps_raw, list) or not steps_raw:
                raise d.error("explicit plans need at least one [[plan.steps]] entry", "plan")
            steps = []
            for s in steps_raw:
                d.check_keys(s, _STEP_KEYS, "plan.steps")
                r_foot = d.vector(s, "r_foot", "plan.steps")
                if r_foot is None:
                    raise d.error("missing required key 'r_foot'", "plan.steps")
                steps.append(Step(r_foot, d.number(s, "phi_vro", "plan.steps", angle=True),
                                  d.number(s, "duration", "plan.steps")))
            return FootstepPlan(tuple(steps), terminal=d.string(table, "terminal", "plan", "rest"),
                                period_shift=d.vector(table, "period_shift", "plan"))
    except PlanError as exc:
        raise d.error(str(exc), "plan") from None
    raise d.error(f"unknown plan kind {kind!r} (expected 'walking' or 'explicit')", "plan", "kind")


def _initial(d: _Doc, table) -> Optional[SpatialState]:
    if table is None:
        return None
    d.check_keys(table, _INITIAL_KEYS, "initial")
    x = d.vector(table, "x", "initial")
    if x is None:
        raise d.error("[initial] needs 'x'", "initial")
    return SpatialState(x, d.vector(table, "xdot", "initial", [0.0, 0.0, 0.0]),
                        d.number(table, "theta", "initial", 0.0, angle=True),
                        d.number(table, "thetadot", "initial", 0.0))


def scenario_to_dict(sc: ScenarioConfig) -> dict:
    """Document form of a scenario; the plan is written in explicit form."""
    sim, p = sc.sim, sc.sim.params
    doc = {
        "schema": SCHEMA_VERSION,
        "name": sc.name,
        "description": sc.description,
        "params": {"m": p.m, "I": p.I, "g": p.g, "h": p.h, "eta": p.eta, "k_l": p.k_l, "k_a": p.k_a,
                   "r_cop_thres": p.r_cop_thres},
        "plan": sim.plan.to_dict(),
        "sim": {"dt": sim.dt, "control_rate": sim.control_rate, "control_mode": sim.control_mode,
                "feedforward": sim.feedforward, "cop_constraint": sim.cop_constraint,
                "reference_mode": sim.reference_mode, "divergence_position": sim.divergence_position,
                "divergence_angle": sim.divergence_angle},
        "output": {"csv": sc.output.csv, "summary": sc.output.summary, "plot_data": sc.output.plot_data,
                   "settle_tol": sc.output.settle_tol},
    }
    if sim.initial is not None:
        s = sim.initial
        doc["initial"] = {"x": [float(v) for v in s.x], "xdot": [float(v) for v in s.xdot],
                          "theta": s.theta, "thetadot": s.thetadot}
    return doc


def dump_scenario(sc: ScenarioConfig) -> str:
    return tomli_w.dumps(scenario_to_dict(sc))
