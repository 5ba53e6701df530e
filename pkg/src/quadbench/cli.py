"""Command-line front end: scenario configs, single runs, comparison batches.

A single JSON config file describes the vehicle, the scenario, the
controller roster, and output options.  Missing keys fall back to
defaults that reproduce the bench's standard helix setup; unknown keys
are rejected with a diagnostic naming the offending key path.

Exit codes: 0 clean run, 1 config error, 2 controller fault or truncated
trace.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import BASELINE_KINDS, BscGains, PdGains, SmcGains
from .dynamics import STATE_DIM, QuadParams
from .harness import (
    ControllerSpec,
    MetricsReport,
    Scenario,
    SimTrace,
    compute_rmse,
    disturbance_profile,
    run_closed_loop,
    write_trace_csv,
)
from .lmpc import LmpcConfig
from .nmpc import NmpcConfig
from .plots import Panel, Series, oblique_projection, render_grid
from .references import make_helix, make_hover

ENV_OUTPUT_DIR = "QUADBENCH_OUTPUT_DIR"

MPC_KINDS = ("lmpc", "nmpc")
ALL_KINDS = BASELINE_KINDS + MPC_KINDS


class ConfigError(ValueError):
    """Schema violation; the message names the offending key path."""


def default_config() -> dict:
    params = QuadParams()
    mpc_common = {
        "horizon": 18,
        "control_horizon": 2,
        "q_diag": [1.0] * 6 + [0.0] * 6,
        "p_diag": [1.0] * 6 + [0.0] * 6,
        "r_diag": [0.1] * 4,
        "u_min": [0.0] * 4,
        "u_max": [10.0] * 4,
        "du_max": [2.0] * 4,
    }
    pd, smc, bsc = PdGains(), SmcGains(), BscGains()
    return {
        "params": {
            "mass": params.mass,
            "gravity": params.gravity,
            "inertia_xx": params.inertia_xx,
            "inertia_yy": params.inertia_yy,
            "inertia_zz": params.inertia_zz,
            "thrust_coeff": params.thrust_coeff,
            "drag_coeff": params.drag_coeff,
            "arm_length": params.arm_length,
        },
        "scenario": {
            "dt": 0.1,
            "duration": 40.0,
            "initial_state": [0.0] * STATE_DIM,
            "transient_cut": 0.0,
            "reference": {
                "kind": "helix",
                "radius": 2.0,
                "angular_rate": 0.4,
                "climb_rate": 0.2,
            },
            "disturbance": {"kind": "none", "force": [0.0, 0.0, 0.0], "window": [0.0, 1.0]},
        },
        "controllers": [
            {
                "name": "pd",
                "kind": "pd",
                "u_min": [0.0] * 4,
                "u_max": [10.0] * 4,
                "gains": {
                    "pos_p": list(pd.pos_p),
                    "pos_d": list(pd.pos_d),
                    "att_p": list(pd.att_p),
                    "att_d": list(pd.att_d),
                },
            },
            {
                "name": "smc",
                "kind": "smc",
                "u_min": [0.0] * 4,
                "u_max": [10.0] * 4,
                "gains": {
                    "pos_p": list(smc.pos_p),
                    "pos_d": list(smc.pos_d),
                    "slope": list(smc.slope),
                    "switch_gain": list(smc.switch_gain),
                    "boundary_layer": list(smc.boundary_layer),
                },
            },
            {
                "name": "bsc",
                "kind": "bsc",
                "u_min": [0.0] * 4,
                "u_max": [10.0] * 4,
                "gains": {
                    "pos_p": list(bsc.pos_p),
                    "pos_d": list(bsc.pos_d),
                    "k1": list(bsc.k1),
                    "k2": list(bsc.k2),
                },
            },
            {"name": "lmpc", "kind": "lmpc", **mpc_common},
            {
                "name": "nmpc",
                "kind": "nmpc",
                **mpc_common,
                "max_sqp_iterations": 30,
                "step_tol": 1e-6,
                "defect_tol": 1e-6,
            },
        ],
        "output": {"directory": "quadbench_out", "plots": True},
    }


# -- schema helpers -----------------------------------------------------


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return value


def _reject_unknown(section: dict, allowed, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _number(section: dict, key: str, path: str, default) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    return float(value)


def _number_list(section: dict, key: str, path: str, default, length: int) -> list[float]:
    value = section.get(key, default)
    if not isinstance(value, list) or len(value) != length:
        raise ConfigError(f"{path}.{key}: expected a list of {length} numbers")
    out = []
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{path}.{key}[{i}]: expected a number")
        out.append(float(item))
    return out


def _integer(section: dict, key: str, path: str, default) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    return value


def _boolean(section: dict, key: str, path: str, default) -> bool:
    value = section.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected true or false")
    return value


def _string(section: dict, key: str, path: str, default, choices=None) -> str:
    value = section.get(key, default)
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}: expected a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"{path}.{key}: expected one of {sorted(choices)}, got {value!r}")
    return value


# -- normalization ------------------------------------------------------


def _normalize_reference(section, defaults: dict, path: str) -> dict:
    section = _expect_mapping(section, path)
    kind = _string(section, "kind", path, defaults["kind"], choices=("helix", "hover"))
    if kind == "helix":
        base = defaults if defaults["kind"] == "helix" else {"radius": 2.0, "angular_rate": 0.4, "climb_rate": 0.2}
        _reject_unknown(section, ("kind", "radius", "angular_rate", "climb_rate"), path)
        return {
            "kind": "helix",
            "radius": _number(section, "radius", path, base.get("radius", 2.0)),
            "angular_rate": _number(section, "angular_rate", path, base.get("angular_rate", 0.4)),
            "climb_rate": _number(section, "climb_rate", path, base.get("climb_rate", 0.2)),
        }
    _reject_unknown(section, ("kind", "position", "yaw"), path)
    return {
        "kind": "hover",
        "position": _number_list(section, "position", path, [0.0, 0.0, 0.0], 3),
        "yaw": _number(section, "yaw", path, 0.0),
    }


def _normalize_disturbance(section, defaults: dict, path: str) -> dict:
    section = _expect_mapping(section, path)
    _reject_unknown(section, ("kind", "force", "window"), path)
    kind = _string(section, "kind", path, defaults["kind"], choices=("none", "constant", "pulse"))
    return {
        "kind": kind,
        "force": _number_list(section, "force", path, defaults["force"], 3),
        "window": _number_list(section, "window", path, defaults["window"], 2),
    }


_GAIN_KEYS = {
    "pd": ("pos_p", "pos_d", "att_p", "att_d"),
    "smc": ("pos_p", "pos_d", "slope", "switch_gain", "boundary_layer"),
    "bsc": ("pos_p", "pos_d", "k1", "k2"),
}

_MPC_KEYS = (
    "horizon",
    "control_horizon",
    "q_diag",
    "p_diag",
    "r_diag",
    "u_min",
    "u_max",
    "du_max",
)
_NMPC_EXTRA_KEYS = ("max_sqp_iterations", "step_tol", "defect_tol")


def _normalize_controller(entry, index: int, defaults_by_kind: dict) -> dict:
    path = f"controllers[{index}]"
    entry = _expect_mapping(entry, path)
    kind = _string(entry, "kind", path, entry.get("name", ""), choices=ALL_KINDS)
    defaults = defaults_by_kind[kind]
    name = _string(entry, "name", path, kind)
    out = {"name": name, "kind": kind}
    if kind in BASELINE_KINDS:
        _reject_unknown(entry, ("name", "kind", "gains", "u_min", "u_max"), path)
        gains_in = _expect_mapping(entry.get("gains", {}), f"{path}.gains")
        _reject_unknown(gains_in, _GAIN_KEYS[kind], f"{path}.gains")
        out["u_min"] = _number_list(entry, "u_min", path, defaults["u_min"], 4)
        out["u_max"] = _number_list(entry, "u_max", path, defaults["u_max"], 4)
        out["gains"] = {
            key: _number_list(gains_in, key, f"{path}.gains", defaults["gains"][key], 3)
            for key in _GAIN_KEYS[kind]
        }
        return out
    allowed = ("name", "kind") + _MPC_KEYS + (_NMPC_EXTRA_KEYS if kind == "nmpc" else ())
    _reject_unknown(entry, allowed, path)
    out["horizon"] = _integer(entry, "horizon", path, defaults["horizon"])
    out["control_horizon"] = _integer(entry, "control_horizon", path, defaults["control_horizon"])
    for key in ("q_diag", "p_diag"):
        out[key] = _number_list(entry, key, path, defaults[key], 12)
    for key in ("r_diag", "u_min", "u_max", "du_max"):
        out[key] = _number_list(entry, key, path, defaults[key], 4)
    if kind == "nmpc":
        out["max_sqp_iterations"] = _integer(entry, "max_sqp_iterations", path, defaults["max_sqp_iterations"])
        out["step_tol"] = _number(entry, "step_tol", path, defaults["step_tol"])
        out["defect_tol"] = _number(entry, "defect_tol", path, defaults["defect_tol"])
    return out


def normalize_config(raw: dict) -> dict:
    """Fill defaults, reject unknown keys, and coerce value types."""
    raw = _expect_mapping(raw, "config")
    _reject_unknown(raw, ("params", "scenario", "controllers", "output"), "config")
    defaults = default_config()

    params_in = _expect_mapping(raw.get("params", {}), "params")
    _reject_unknown(params_in, tuple(defaults["params"]), "params")
    params = {key: _number(params_in, key, "params", value) for key, value in defaults["params"].items()}

    scen_in = _expect_mapping(raw.get("scenario", {}), "scenario")
    scen_defaults = defaults["scenario"]
    _reject_unknown(scen_in, tuple(scen_defaults), "scenario")
    scenario = {
        "dt": _number(scen_in, "dt", "scenario", scen_defaults["dt"]),
        "duration": _number(scen_in, "duration", "scenario", scen_defaults["duration"]),
        "initial_state": _number_list(
            scen_in, "initial_state", "scenario", scen_defaults["initial_state"], STATE_DIM
        ),
        "transient_cut": _number(scen_in, "transient_cut", "scenario", scen_defaults["transient_cut"]),
        "reference": _normalize_reference(
            scen_in.get("reference", scen_defaults["reference"]),
            scen_defaults["reference"],
            "scenario.reference",
        ),
        "disturbance": _normalize_disturbance(
            scen_in.get("disturbance", scen_defaults["disturbance"]),
            scen_defaults["disturbance"],
            "scenario.disturbance",
        ),
    }

    defaults_by_kind = {entry["kind"]: entry for entry in defaults["controllers"]}
    controllers_in = raw.get("controllers", defaults["controllers"])
    if not isinstance(controllers_in, list) or not controllers_in:
        raise ConfigError("controllers: expected a non-empty list")
    controllers = [
        _normalize_controller(entry, i, defaults_by_kind) for i, entry in enumerate(controllers_in)
    ]
    names = [entry["name"] for entry in controllers]
    if len(set(names)) != len(names):
        raise ConfigError("controllers: duplicate controller names")

    output_in = _expect_mapping(raw.get("output", {}), "output")
    _reject_unknown(output_in, ("directory", "plots"), "output")
    output = {
        "directory": _string(output_in, "directory", "output", defaults["output"]["directory"]),
        "plots": _boolean(output_in, "plots", "output", defaults["output"]["plots"]),
    }
    return {"params": params, "scenario": scenario, "controllers": controllers, "output": output}


# -- config -> objects ---------------------------------------------------


@dataclass(frozen=True)
class BenchSetup:
    params: QuadParams
    scenario_base: dict
    controllers: list
    transient_cut: float
    output_dir: Path
    plots: bool


def _build_params(section: dict) -> QuadParams:
    try:
        return QuadParams(**section)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None


def _build_reference(section: dict):
    if section["kind"] == "helix":
        if section["radius"] <= 0.0:
            raise ConfigError("scenario.reference.radius: must be positive")
        return make_helix(section["radius"], section["angular_rate"], section["climb_rate"])
    return make_hover(section["position"], section["yaw"])


def _build_disturbance(section: dict, duration: float):
    kind = section["kind"]
    try:
        if kind == "pulse":
            window = (section["window"][0], section["window"][1])
            if not (0.0 <= window[0] and window[1] <= duration):
                raise ConfigError("scenario.disturbance.window: must lie within the run duration")
            return disturbance_profile("pulse", section["force"], window)
        if kind == "constant":
            return disturbance_profile("constant", section["force"])
        return disturbance_profile("none")
    except ValueError as exc:
        raise ConfigError(f"scenario.disturbance: {exc}") from None


def _controller_spec(entry: dict, dt: float) -> ControllerSpec:
    kind = entry["kind"]
    path = f"controllers.{entry['name']}"
    try:
        if kind == "lmpc" or kind == "nmpc":
            cls = LmpcConfig if kind == "lmpc" else NmpcConfig
            kwargs = {
                "horizon": entry["horizon"],
                "control_horizon": entry["control_horizon"],
                "q_diag": np.array(entry["q_diag"]),
                "p_diag": np.array(entry["p_diag"]),
                "r_diag": np.array(entry["r_diag"]),
                "u_min": np.array(entry["u_min"]),
                "u_max": np.array(entry["u_max"]),
                "du_max": np.array(entry["du_max"]),
                "dt": dt,
            }
            if kind == "nmpc":
                kwargs.update(
                    max_sqp_iterations=entry["max_sqp_iterations"],
                    step_tol=entry["step_tol"],
                    defect_tol=entry["defect_tol"],
                )
            return ControllerSpec(kind=kind, config=cls(**kwargs))
        gains_cls = {"pd": PdGains, "smc": SmcGains, "bsc": BscGains}[kind]
        gains = gains_cls(**{key: np.array(value) for key, value in entry["gains"].items()})
        return ControllerSpec(
            kind=kind,
            config=gains,
            u_min=np.array(entry["u_min"]),
            u_max=np.array(entry["u_max"]),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def build_setup(config: dict) -> BenchSetup:
    params = _build_params(config["params"])
    scen = config["scenario"]
    if scen["dt"] <= 0.0:
        raise ConfigError("scenario.dt: must be positive")
    if scen["duration"] < scen["dt"]:
        raise ConfigError("scenario.duration: must be at least one control step")
    if not (0.0 <= scen["transient_cut"] < scen["duration"]):
        raise ConfigError("scenario.transient_cut: must lie in [0, duration)")
    reference = _build_reference(scen["reference"])
    disturbance = _build_disturbance(scen["disturbance"], scen["duration"])
    scenario_base = {
        "params": params,
        "reference": reference,
        "disturbance": disturbance,
        "dt": scen["dt"],
        "duration": scen["duration"],
        "initial_state": np.array(scen["initial_state"]),
    }
    controllers = [
        (entry["name"], _controller_spec(entry, scen["dt"])) for entry in config["controllers"]
    ]
    directory = os.environ.get(ENV_OUTPUT_DIR) or config["output"]["directory"]
    return BenchSetup(
        params=params,
        scenario_base=scenario_base,
        controllers=controllers,
        transient_cut=scen["transient_cut"],
        output_dir=Path(directory),
        plots=config["output"]["plots"],
    )


def load_config(path: str | None) -> dict:
    if path is None:
        return normalize_config({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON ({exc})") from None
    return normalize_config(raw)


def _scenario_for(setup: BenchSetup, spec: ControllerSpec) -> Scenario:
    try:
        return Scenario(controller=spec, **setup.scenario_base)
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None


# -- output writers ------------------------------------------------------


def _safe_metrics(trace: SimTrace, transient_cut: float) -> MetricsReport:
    try:
        return compute_rmse(trace, transient_cut)
    except ValueError:
        return MetricsReport.from_axes(np.full(3, np.nan), np.full(3, np.nan))


def _write_metrics(metrics: MetricsReport, path: Path) -> None:
    path.write_text(json.dumps(metrics.as_dict(), indent=2) + "\n")


def _metrics_table_rows(results) -> list[str]:
    header = "controller,rmse_x,rmse_y,rmse_z,rmse_phi,rmse_theta,rmse_psi,rmse_xyz,rmse_att,status"
    lines = [header]
    for name, metrics, fault in results:
        values = metrics.as_dict()
        status = "fault" if fault else "ok"
        lines.append(name + "," + ",".join("%.9g" % values[k] for k in list(values)) + f",{status}")
    return lines


def _metrics_table_text(results) -> list[str]:
    columns = ("controller", "rmse_x", "rmse_y", "rmse_z", "rmse_phi", "rmse_theta", "rmse_psi", "rmse_xyz", "rmse_att", "status")
    rows = [columns]
    for name, metrics, fault in results:
        values = metrics.as_dict()
        rows.append(
            (name,)
            + tuple("%.5f" % values[k] for k in list(values))
            + (("fault" if fault else "ok"),)
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(columns))]
    return ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]


_ERROR_LABELS = ("err_x", "err_y", "err_z", "err_phi", "err_theta", "err_psi")


def _write_plots(setup: BenchSetup, traces: dict[str, SimTrace]) -> None:
    reference = setup.scenario_base["reference"]
    duration = setup.scenario_base["duration"]
    dt = setup.scenario_base["dt"]
    t_ref = np.arange(int(round(duration / dt)) + 1) * dt
    ref_xyz = np.stack([reference(float(t)).position for t in t_ref])
    rx, ry = oblique_projection(ref_xyz)
    path_panel = Panel(title="tracked path (oblique projection)", xlabel="x + 0.35 y", ylabel="z + 0.35 y")
    path_panel.series.append(Series("reference", rx, ry))
    for name, trace in traces.items():
        px, py = oblique_projection(trace.states[:, :3])
        path_panel.series.append(Series(name, px, py))
    render_grid([path_panel], 1, setup.output_dir / "compare_path.svg")

    error_panels = []
    for i, label in enumerate(_ERROR_LABELS):
        panel = Panel(title=label, xlabel="t [s]", ylabel=label)
        for name, trace in traces.items():
            panel.series.append(Series(name, trace.t, trace.errors[:, i]))
        error_panels.append(panel)
    render_grid(error_panels, 3, setup.output_dir / "compare_errors.svg")

    input_panels = []
    for i in range(4):
        panel = Panel(title=f"u{i + 1}", xlabel="t [s]", ylabel="(rad/s)^2")
        for name, trace in traces.items():
            panel.series.append(Series(name, trace.t, trace.inputs[:, i]))
        input_panels.append(panel)
    render_grid(input_panels, 2, setup.output_dir / "compare_inputs.svg")


# -- commands ------------------------------------------------------------


def cmd_simulate(config_path: str | None, controller_name: str) -> int:
    config = load_config(config_path)
    setup = build_setup(config)
    by_name = dict(setup.controllers)
    if controller_name not in by_name:
        raise ConfigError(
            f"controllers: unknown controller name {controller_name!r} "
            f"(configured: {', '.join(name for name, _ in setup.controllers)})"
        )
    scenario = _scenario_for(setup, by_name[controller_name])
    trace = run_closed_loop(scenario)
    setup.output_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, setup.output_dir / f"{controller_name}_trace.csv")
    _write_metrics(_safe_metrics(trace, setup.transient_cut), setup.output_dir / f"{controller_name}_metrics.json")
    if trace.fault is not None:
        print(f"{controller_name}: fault, trace truncated ({trace.fault})", file=sys.stderr)
        return 2
    return 0


def cmd_compare(config_path: str | None) -> int:
    config = load_config(config_path)
    setup = build_setup(config)
    setup.output_dir.mkdir(parents=True, exist_ok=True)
    results = []
    traces: dict[str, SimTrace] = {}
    for name, spec in setup.controllers:
        scenario = _scenario_for(setup, spec)
        trace = run_closed_loop(scenario)
        traces[name] = trace
        write_trace_csv(trace, setup.output_dir / f"{name}_trace.csv")
        metrics = _safe_metrics(trace, setup.transient_cut)
        _write_metrics(metrics, setup.output_dir / f"{name}_metrics.json")
        results.append((name, metrics, trace.fault))
        if trace.fault is not None:
            print(f"{name}: fault, trace truncated ({trace.fault})", file=sys.stderr)
    (setup.output_dir / "metrics_table.csv").write_text("\n".join(_metrics_table_rows(results)) + "\n")
    (setup.output_dir / "metrics_table.txt").write_text("\n".join(_metrics_table_text(results)) + "\n")
    if setup.plots:
        _write_plots(setup, traces)
    return 2 if any(fault is not None for _, _, fault in results) else 0


def cmd_print_defaults() -> int:
    print(json.dumps(default_config(), indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quadbench",
        description="Quadrotor trajectory-tracking bench: simulate one controller or compare the roster.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one controller and write trace + metrics")
    p_sim.add_argument("--config", default=None, help="path to a JSON config (defaults apply if omitted)")
    p_sim.add_argument("--controller", required=True, help="controller name from the config roster")

    p_cmp = sub.add_parser("compare", help="run every configured controller on the same scenario")
    p_cmp.add_argument("--config", default=None, help="path to a JSON config (defaults apply if omitted)")

    sub.add_parser("print-defaults", help="print the fully populated default config")

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.controller)
        if args.command == "compare":
            return cmd_compare(args.config)
        return cmd_print_defaults()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
