"""Command-line front end.

Every subcommand accepts the market flags (``--p --c --t1 --t2 --a1 --a2``),
a utility choice and an optional YAML config file. Values are resolved as
defaults < config file < flags. Exit codes: 0 success, 1 I/O failure,
2 invalid input.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import asdict

import yaml

from zrsim.dynamics import (Converged, MaxRoundsExceeded, Oscillating, make_state, run_dynamics,
                            verify_system_equilibrium)
from zrsim.errors import ModelError
from zrsim.experiments import (RAY_HEADER, REGION_HEADER, GridRange, SweepSpec, fmt, sweep_region_map,
                               sweep_single_isp, sweep_surplus_ray)
from zrsim.isp_strategy import best_response, sponsorship_threshold
from zrsim.market import DUOPOLY, monopoly
from zrsim.user_model import CONFIGS, LOG_UTILITY, Config, ModelParams, consumption_table, expression_utility

MODEL_DEFAULTS = {"p": 0.35, "c": 4.0, "t1": 3.0, "t2": 3.0, "a1": 0.0, "a2": 0.0,
                  "utility": "log", "psi": None, "dpsi": None, "allow_corner": False, "monopoly": False}
COMMAND_DEFAULTS = {"rho": None, "grid": None, "a_max": 10.0, "max_rounds": 100, "out": None,
                    "format": None, "config": None, "q1": None, "m1": None, "q2": None, "m2": None,
                    "q_other": 0.0, "m_other": "NN", "isp": 1, "initial_m2": "NN", "initial_q2": None}
DEFAULT_GRID = {"sweep-map": 60, "sweep-ray": 200, "sweep-single-isp": 200}


class UsageError(ModelError):
    pass


def _config_name(raw) -> Config:
    try:
        return Config(str(raw).upper())
    except ValueError:
        raise UsageError(f"configuration must be one of NN, SN, NS, SS, got {raw!r}")


def _add_model_flags(sp):
    g = sp.add_argument_group("model")
    for name in ("p", "c", "t1", "t2", "a1", "a2"):
        g.add_argument(f"--{name}", type=float, default=None)
    g.add_argument("--t", type=float, default=None, help="set t1 = t2")
    g.add_argument("--utility", choices=["log", "custom"], default=None)
    g.add_argument("--psi", default=None, help="custom utility, expression in z")
    g.add_argument("--dpsi", default=None, help="its derivative, expression in z")
    g.add_argument("--allow-corner", action="store_true", default=None,
                   help="saturate market shares instead of rejecting invalid Hotelling parameters")
    g.add_argument("--monopoly", action="store_true", default=None, help="freeze market shares")
    g.add_argument("--config-file", default=None)
    g.add_argument("--format", choices=["table", "csv", "json-lines"], default=None)
    g.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zrsim", description="Zero-rating market equilibria")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve-user", help="optimal consumption per configuration")
    _add_model_flags(sp)
    sp.add_argument("--config", default=None)

    sp = sub.add_parser("best-response", help="an ISP's best response to its rival")
    _add_model_flags(sp)
    sp.add_argument("--q-other", type=float, default=None)
    sp.add_argument("--m-other", default=None)
    sp.add_argument("--isp", type=int, choices=[1, 2], default=None)

    sp = sub.add_parser("dynamics", help="alternating best-response dynamics")
    _add_model_flags(sp)
    sp.add_argument("--max-rounds", type=int, default=None)
    sp.add_argument("--initial-m2", default=None)
    sp.add_argument("--initial-q2", type=float, default=None)

    sp = sub.add_parser("verify", help="check a candidate system equilibrium")
    _add_model_flags(sp)
    for name in ("q1", "q2"):
        sp.add_argument(f"--{name}", type=float, default=None)
    for name in ("m1", "m2"):
        sp.add_argument(f"--{name}", default=None)

    for name in ("sweep-map", "sweep-ray", "sweep-single-isp"):
        sp = sub.add_parser(name)
        _add_model_flags(sp)
        sp.add_argument("--grid", type=int, default=None)
        sp.add_argument("--a-max", type=float, default=None)
        sp.add_argument("--max-rounds", type=int, default=None)
        sp.add_argument("--initial-m2", default=None)
        if name != "sweep-map":
            sp.add_argument("--rho", type=float, default=None)

    sp = sub.add_parser("thresholds", help="sponsorship threshold a_s along (a, rho a)")
    _add_model_flags(sp)
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--q-other", type=float, default=None)
    sp.add_argument("--m-other", default=None)
    sp.add_argument("--isp", type=int, choices=[1, 2], default=None)
    return parser


def _load_config_file(path: str) -> dict:
    """Flatten the ``model``, ``sweep`` and ``output`` sections into one dict."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except yaml.YAMLError as e:
        raise UsageError(f"config file {path}: {e}")
    if not isinstance(raw, dict):
        raise UsageError(f"config file {path}: top level must be a mapping")
    flat = {}
    for section in ("model", "sweep", "output"):
        body = raw.get(section) or {}
        if not isinstance(body, dict):
            raise UsageError(f"config file {path}: section {section!r} must be a mapping")
        for k, v in body.items():
            flat[k.replace("-", "_")] = v
    for k, v in raw.items():
        if k not in ("model", "sweep", "output"):
            flat[k.replace("-", "_")] = v
    known = set(MODEL_DEFAULTS) | set(COMMAND_DEFAULTS) | {"t", "path"}
    unknown = sorted(set(flat) - known)
    if unknown:
        raise UsageError(f"config file {path}: unknown keys {unknown}")
    if "path" in flat:
        flat["out"] = flat.pop("path")
    return flat


def resolve(args: argparse.Namespace) -> dict:
    opts = dict(MODEL_DEFAULTS)
    opts.update(COMMAND_DEFAULTS)
    opts["grid"] = DEFAULT_GRID.get(args.command)
    opts["format"] = "csv" if args.command.startswith("sweep") else "table"
    layers = []
    if args.config_file:
        layers.append(_load_config_file(args.config_file))
    layers.append({k: v for k, v in vars(args).items() if v is not None})
    for layer in layers:
        layer = dict(layer)
        if layer.get("t") is not None:
            layer.setdefault("t1", layer["t"])
            layer.setdefault("t2", layer["t"])
        opts.update(layer)
    return opts


def _float(opts, name):
    try:
        return float(opts[name])
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be a number, got {opts[name]!r}")


def make_params(opts: dict) -> ModelParams:
    if opts["utility"] == "custom":
        if not (opts["psi"] and opts["dpsi"]):
            raise UsageError("--utility custom requires --psi and --dpsi")
        try:
            utility = expression_utility(str(opts["psi"]), str(opts["dpsi"]))
            utility.psi(0.0)
            utility.dpsi(0.0)
        except ModelError:
            raise
        except Exception as e:
            raise UsageError(f"custom utility expression invalid: {e}")
    elif opts["utility"] == "log":
        utility = LOG_UTILITY
    else:
        raise UsageError(f"utility must be log or custom, got {opts['utility']!r}")
    vals = {k: _float(opts, k) for k in ("p", "c", "t1", "t2", "a1", "a2")}
    mode = monopoly(vals["t1"], vals["t2"]) if opts["monopoly"] else DUOPOLY
    params = ModelParams(utility=utility, mode=mode, allow_corner=bool(opts["allow_corner"]), **vals)
    params.validate_hotelling()
    return params


def make_sweep(opts: dict, params: ModelParams) -> SweepSpec:
    grid = int(opts["grid"])
    rounds = int(opts["max_rounds"])
    if rounds < 2:
        raise UsageError(f"max-rounds must be >= 2, got {rounds}")
    return SweepSpec(p=params.p, c=params.c, t1=params.t1, t2=params.t2, utility=params.utility,
                     a1=GridRange.up_to(_float(opts, "a_max"), grid), rho=opts["rho"],
                     allow_corner=params.allow_corner, max_rounds=rounds,
                     initial_m2=_config_name(opts["initial_m2"]))


def _check_sweep_params(spec: SweepSpec) -> None:
    # validate the largest rates too (utility and Hotelling checks are rate-free)
    spec.params(spec.a1.max, spec.a1.max).validate_hotelling()


# Output -------------------------------------------------------------------

def emit(rows: list, header: list, fmt_name: str, out) -> None:
    """Write rows (dicts) as an aligned table, CSV or JSON lines."""
    cells = [[fmt(r[h]) for h in header] for r in rows]
    if fmt_name == "csv":
        out.write(",".join(header) + "\n")
        for c in cells:
            out.write(",".join(c) + "\n")
    elif fmt_name == "json-lines":
        for r in rows:
            out.write(json.dumps({h: _jsonable(r[h]) for h in header}) + "\n")
    else:
        widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h) for i, h in enumerate(header)]
        out.write("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
        for c in cells:
            out.write("  ".join(v.ljust(w) for v, w in zip(c, widths)).rstrip() + "\n")


def _jsonable(v):
    if isinstance(v, float):
        return None if math.isnan(v) else float(fmt(v))
    if isinstance(v, Config):
        return str(v)
    return v


STATE_HEADER = ["q1", "m1", "q2", "m2", "x", "isp1", "isp2", "cp1", "cp2", "users", "users_without_transport"]


def _state_row(state, **extra) -> dict:
    d = {k: getattr(state, k) for k in STATE_HEADER}
    d["m1"], d["m2"] = str(state.m1), str(state.m2)
    d.update(extra)
    return d


# Commands -----------------------------------------------------------------

def cmd_solve_user(opts, params, out):
    table = consumption_table(params)
    configs = [_config_name(opts["config"])] if opts["config"] else list(CONFIGS)
    rows = [{"config": str(m), "theta1": table[m].theta1, "theta2": table[m].theta2, "u": table[m].u}
            for m in configs]
    emit(rows, ["config", "theta1", "theta2", "u"], opts["format"], out)


def cmd_best_response(opts, params, out):
    br = best_response(params, _float(opts, "q_other"), _config_name(opts["m_other"]), int(opts["isp"]))
    rows = []
    for m in CONFIGS:
        e = br.per_config[m]
        rows.append({"config": str(m), "feasible": e is not None,
                     "q": e[0] if e else float("nan"), "profit": e[1] if e else float("nan"),
                     "chosen": m == br.config})
    emit(rows, ["config", "feasible", "q", "profit", "chosen"], opts["format"], out)


def cmd_dynamics(opts, params, out):
    rounds = int(opts["max_rounds"])
    if rounds < 2:
        raise UsageError(f"max-rounds must be >= 2, got {rounds}")
    q2 = opts["initial_q2"]
    o = run_dynamics(params, _config_name(opts["initial_m2"]), None if q2 is None else float(q2), rounds)
    header = ["outcome", "rounds"] + STATE_HEADER
    if isinstance(o, Converged):
        rows = [_state_row(o.state, outcome=o.label, rounds=o.rounds)]
    elif isinstance(o, Oscillating):
        rows = [_state_row(s, outcome=f"{o.label}[{i + 1}/{o.period}]", rounds=len(o.history))
                for i, s in enumerate(o.cycle)]
    else:
        assert isinstance(o, MaxRoundsExceeded)
        rows = [_state_row(o.state, outcome=o.label, rounds=len(o.history))]
    emit(rows, header, opts["format"], out)


def cmd_verify(opts, params, out):
    missing = [k for k in ("q1", "m1", "q2", "m2") if opts[k] is None]
    if missing:
        raise UsageError(f"verify requires {', '.join('--' + k for k in missing)}")
    state = make_state(params, _float(opts, "q1"), _config_name(opts["m1"]),
                       _float(opts, "q2"), _config_name(opts["m2"]))
    rep = verify_system_equilibrium(params, state)
    rows = [{"check": "i_isp_best_response", "passed": rep.check_i},
            {"check": "ii_cp_nash", "passed": rep.check_ii},
            {"check": "iii_strong_cp", "passed": rep.check_iii}]
    emit(rows, ["check", "passed"], opts["format"], out)
    if opts["format"] == "table":
        for w in rep.witnesses:
            out.write(f"witness: {w}\n")


def cmd_sweep_map(opts, params, out):
    spec = make_sweep(opts, params)
    _check_sweep_params(spec)
    cells = sweep_region_map(spec)
    emit([asdict(c) for c in cells], REGION_HEADER, opts["format"], out)


def _rho(opts) -> float:
    if opts["rho"] is None:
        raise UsageError("--rho is required")
    rho = _float(opts, "rho")
    if not (0.0 < rho < 1.0):
        raise UsageError(f"rho must lie in (0, 1), got {rho}")
    return rho


def cmd_sweep_ray(opts, params, out):
    rho = _rho(opts)
    spec = make_sweep(opts, params)
    _check_sweep_params(spec)
    emit([asdict(r) for r in sweep_surplus_ray(spec, rho)], RAY_HEADER, opts["format"], out)


def cmd_sweep_single_isp(opts, params, out):
    rho = _rho(opts)
    spec = make_sweep(opts, params)
    _check_sweep_params(spec)
    emit([asdict(r) for r in sweep_single_isp(spec, rho)], RAY_HEADER, opts["format"], out)


def cmd_thresholds(opts, params, out):
    rep = sponsorship_threshold(params, _rho(opts), _config_name(opts["m_other"]), _float(opts, "q_other"),
                                isp_index=int(opts["isp"]))
    rows = [{"a_s": rep.a_s, "branch": rep.branch if rep.found else "none", "a_prime": rep.a_prime,
             "a_double_prime": rep.a_double_prime, "a_sn": rep.a_sn}]
    emit(rows, ["a_s", "branch", "a_prime", "a_double_prime", "a_sn"], opts["format"], out)


COMMANDS = {
    "solve-user": cmd_solve_user,
    "best-response": cmd_best_response,
    "dynamics": cmd_dynamics,
    "verify": cmd_verify,
    "sweep-map": cmd_sweep_map,
    "sweep-ray": cmd_sweep_ray,
    "sweep-single-isp": cmd_sweep_single_isp,
    "thresholds": cmd_thresholds,
}


def run_command(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    buf = io.StringIO()
    try:
        opts = resolve(args)
        if opts["format"] not in ("table", "csv", "json-lines"):
            raise UsageError(f"format must be table, csv or json-lines, got {opts['format']!r}")
        params = make_params(opts)
        COMMANDS[args.command](opts, params, buf)
    except ModelError as e:
        stderr.write(f"zrsim: invalid input: {e}\n")
        return 2
    except OSError as e:
        stderr.write(f"zrsim: I/O error: {e}\n")
        return 1
    try:
        if opts["out"]:
            with open(opts["out"], "w", newline="") as fh:
                fh.write(buf.getvalue())
        else:
            stdout.write(buf.getvalue())
    except OSError as e:
        stderr.write(f"zrsim: I/O error: {e}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
