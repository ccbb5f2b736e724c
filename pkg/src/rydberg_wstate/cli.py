"""Batch front-end: ``derive``, ``scan``, ``protocol`` and ``sweetspot-check``.

Each subcommand reads one JSON config with ``physical``, ``run`` and
``output`` blocks and writes CSV files whose leading ``#`` lines record the
config hash, code version, N, M and seed.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolver import NoConvergenceError
from .hilbert import CapacityError, InvalidMomentumError
from .params import (
    APPROXIMATE_PRESETS, C3_PRESETS, RB87_MASS, ParameterError, PhysicalParams, derive,
    sweet_spot_detuning, sweet_spot_zeta, to_angular,
)
from .protocol import DEFAULT_BETA_RATIO, DriveSpec, StepSizeError, rwa_preparation_time, simulate_drive
from .scan import ScanError, ground_state_scan, point_dict, sweetspot_checks

log = logging.getLogger(__name__)

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
CSV_FORMAT = "rydberg_wstate-csv/1"
SCAN_COLUMNS = ["lambda_eb", "omega_rabi_rad_s", "e_gs_over_abs_te", "k_gs_rad", "boson_number",
                "w_overlap", "gap_over_omega_b", "e_pi_over_abs_te"]
TRACE_COLUMNS = ["time_s", "fidelity", "vacuum_population", "leakage", "norm_drift"]
PAPER_SCALE = {"n_sites": 10, "max_bosons": 8}

REQUIRED = object()
DEFAULTS = {
    "physical": {
        "a": REQUIRED,  # um
        "omega_b": REQUIRED,
        "alpha": REQUIRED,
        "delta": None,  # None: sweet spot
        "c3_preset": "nq80",
        "c3_over_hbar": None,  # overrides the preset
        "mass": RB87_MASS,
    },
    "run": {
        "n_sites": 8,
        "max_bosons": 6,
        "tol": 1e-10,
        "seed": 0,
        "threads": 1,
        "grid": None,
        "locate_critical": True,
        "check_lambdas": (0.5, 1, 2, 3, 4, 5, 6, 7, 8, 10),
        "q_d": math.pi,
        "beta_p": None,
        "beta_ratio": DEFAULT_BETA_RATIO,
        "t_final": None,  # default: one full Rabi period 2 tau_prep
        "dt": None,
        "record_stride": 1,
        "envelope": "constant",
        "ramp_time": 0.0,
    },
    "output": {"directory": ".", "prefix": "", "units": "angular"},
}
GRID_KINDS = ("lambda", "alpha", "omega_rabi")


class ConfigError(ValueError):
    """Malformed or incomplete configuration (exit code 2)."""


def load_config(path: str | Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    """Merge `raw` over the defaults, rejecting unknown keys and missing required ones."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    cfg = {}
    for block, defaults in DEFAULTS.items():
        given = raw.get(block, {})
        if not isinstance(given, dict):
            raise ConfigError(f"'{block}' must be an object")
        bad = set(given) - set(defaults)
        if bad:
            raise ConfigError(f"unknown key(s) in '{block}': {', '.join(sorted(bad))}")
        merged = {**defaults, **given}
        missing = [k for k, v in merged.items() if v is REQUIRED]
        if missing:
            raise ConfigError(f"missing required key(s) in '{block}': {', '.join(missing)}")
        cfg[block] = merged
    if cfg["output"]["units"] not in ("angular", "cyclic"):
        raise ConfigError("output.units must be 'angular' or 'cyclic'")
    if cfg["physical"]["c3_preset"] not in C3_PRESETS:
        raise ConfigError(f"physical.c3_preset must be one of {sorted(C3_PRESETS)}")
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def build_params(cfg: dict) -> PhysicalParams:
    phys, run, units = cfg["physical"], cfg["run"], cfg["output"]["units"]
    c3 = phys["c3_over_hbar"]
    c3 = C3_PRESETS[phys["c3_preset"]] if c3 is None else to_angular(c3, units)
    if phys["c3_over_hbar"] is None and phys["c3_preset"] in APPROXIMATE_PRESETS:
        log.warning("C3 preset %s is an order-of-magnitude estimate", phys["c3_preset"])
    try:
        return PhysicalParams(
            a=float(phys["a"]),
            omega_b=to_angular(phys["omega_b"], units),
            alpha=float(phys["alpha"]),
            delta=None if phys["delta"] is None else to_angular(phys["delta"], units),
            c3_over_hbar=c3,
            mass=float(phys["mass"]),
            n_sites=int(run["n_sites"]),
            max_bosons=int(run["max_bosons"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _grid(cfg: dict) -> tuple[str, np.ndarray]:
    grid = cfg["run"]["grid"]
    if not isinstance(grid, dict):
        raise ConfigError("run.grid must be an object with 'kind' and 'values' (or start/stop/num)")
    bad = set(grid) - {"kind", "values", "start", "stop", "num"}
    if bad:
        raise ConfigError(f"unknown key(s) in 'run.grid': {', '.join(sorted(bad))}")
    kind = grid.get("kind", "lambda")
    if kind not in GRID_KINDS:
        raise ConfigError(f"run.grid.kind must be one of {GRID_KINDS}")
    if "values" in grid:
        values = np.asarray(grid["values"], dtype=float)
    elif {"start", "stop", "num"} <= set(grid):
        values = np.linspace(grid["start"], grid["stop"], int(grid["num"]))
    else:
        raise ConfigError("run.grid needs 'values' or 'start', 'stop', 'num'")
    if values.ndim != 1 or values.size == 0:
        raise ConfigError("run.grid is empty")
    if np.any(np.diff(values) <= 0):
        raise ConfigError("run.grid values must be strictly increasing")
    if kind == "omega_rabi":
        values = np.array([to_angular(v, cfg["output"]["units"]) for v in values])
    return kind, values


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{x:.12g}"


def _fmt_energy(x: float) -> str:
    return f"{x:.10f}"


class CsvSink:
    """CSV writer with a comment preamble; rows are flushed as they arrive."""

    def __init__(self, path: Path, columns: list[str], header: dict):
        path.parent.mkdir(parents=True, exist_ok=True)
        self.path = path
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._fh.write(f"# format: {CSV_FORMAT}\n")
        for key, value in header.items():
            self._fh.write(f"# {key}: {_fmt(value)}\n")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(columns)

    def row(self, values):
        self._writer.writerow(values)
        self._fh.flush()

    def comment(self, text: str):
        self._fh.write(f"# {text}\n")

    def close(self):
        self._fh.close()


def _header(cfg: dict, p: PhysicalParams, extra: dict | None = None) -> dict:
    h = {
        "config_sha256": config_hash(cfg),
        "version": __version__,
        "N": p.n_sites,
        "M": p.max_bosons,
        "seed": cfg["run"]["seed"],
        "units": "rad/s, um, s",
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    h.update(extra or {})
    return h


def _outpath(cfg: dict, name: str) -> Path:
    out = cfg["output"]
    return Path(out["directory"]) / f"{out['prefix']}{name}"


def _rate(x: float) -> str:
    for scale, prefix in ((1e9, "G"), (1e6, "M"), (1e3, "k")):
        if abs(x) >= scale:
            return f"{x / scale:.4g} {prefix}rad/s"
    return f"{x:.4g} rad/s"


def cmd_derive(cfg: dict, stream=None) -> int:
    stream = stream or sys.stdout
    p = build_params(cfg)
    d = derive(p)
    rows = [
        ("zeta", f"{d.zeta:.12g}", ""),
        ("zeta_ss", f"{sweet_spot_zeta():.12g}", ""),
        ("delta", f"{p.delta:.6e}", "rad/s"),
        ("omega_rabi", f"{p.omega_rabi:.6e}", "rad/s"),
        ("eps0", f"{d.eps0:.6e}", "rad/s"),
        ("t_e", f"{d.t_e:.6e}", "rad/s"),
        ("xi_B", f"{d.xi_b:.6e}", "rad/s/um"),
        ("xi_P", f"{d.xi_p:.6e}", "rad/s/um"),
        ("g_B", f"{d.g_b:.6e}", ""),
        ("g_P", f"{d.g_p:.6e}", ""),
        ("lambda_eb", f"{d.lambda_eb:.6e}", ""),
        ("omega_d", f"{d.omega_d:.6e}", "rad/s"),
    ]
    print(f"# rydberg_wstate {__version__} derive (sweet spot: {p.is_sweet_spot()})", file=stream)
    for name, value, unit in rows:
        print(f"{name:<12} {value:>16} {unit}", file=stream)
    print("# sweet-spot detuning for this C3", file=stream)
    for a in sorted({4.0, 10.0, 15.0, p.a}):
        dss = sweet_spot_detuning(p.c3_over_hbar, a)
        print(f"delta_ss(a={a:g} um) {dss:.6e} rad/s  = {_rate(dss)}", file=stream)
    return EXIT_OK


def cmd_scan(cfg: dict) -> int:
    p = build_params(cfg)
    run = cfg["run"]
    kind, values = _grid(cfg)
    header = _header(cfg, p, {"grid_kind": kind, "a_um": p.a, "omega_b_rad_s": p.omega_b, "delta_rad_s": p.delta})
    sinks = [CsvSink(_outpath(cfg, f"fig{i}.csv"), SCAN_COLUMNS, {**header, "figure": fig})
             for i, fig in ((2, "ground-state energy"), (3, "ground-state quasimomentum"), (4, "lowest K=pi level"))]

    def emit(pt):
        d = point_dict(pt)
        row = [_fmt(d["lambda_eb"]), _fmt(d["omega_rabi"]), _fmt_energy(d["e_gs_over_te"]), _fmt(d["k_gs"]),
               _fmt(d["boson_number"]), _fmt(d["w_overlap"]), _fmt(d["gap_pi_over_omega_b"]),
               _fmt_energy(d["e_pi_over_te"])]
        for s in sinks:
            s.row(row)

    grid_kw = {"lambda": "lambdas", "alpha": "alphas", "omega_rabi": "omegas"}[kind]
    try:
        res = ground_state_scan(p, **{grid_kw: values}, tol=run["tol"], seed=run["seed"],
                                workers=run["threads"], locate_critical=run["locate_critical"], on_point=emit)
    except ScanError:
        for s in sinks:
            s.comment("incomplete: solver failure")
            s.close()
        raise
    for s in sinks:
        if res.lambda_critical is not None:
            s.comment(f"lambda_critical: {_fmt(res.lambda_critical)} "
                      f"bracket: [{_fmt(res.critical_bracket[0])}, {_fmt(res.critical_bracket[1])}]")
        else:
            s.comment("lambda_critical: none on this grid")
        s.close()
    print(f"wrote {', '.join(str(s.path) for s in sinks)}")
    if res.lambda_critical is not None:
        print(f"lambda_c = {res.lambda_critical:.6g}")
    return EXIT_OK


def cmd_protocol(cfg: dict) -> int:
    p = build_params(cfg)
    run, units = cfg["run"], cfg["output"]["units"]
    d = derive(p)
    wd = abs(d.omega_d)
    beta_p = run["beta_ratio"] * wd if run["beta_p"] is None else to_angular(run["beta_p"], units)
    try:
        drive = DriveSpec(q_d=float(run["q_d"]), beta_p=beta_p, omega_drive=wd,
                          envelope=run["envelope"], ramp_time=float(run["ramp_time"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    tau = rwa_preparation_time(beta_p)
    t_final = 2 * tau if run["t_final"] is None else float(run["t_final"])
    trace = simulate_drive(p, drive, t_final, dt=run["dt"], record_stride=int(run["record_stride"]))
    m = trace.meta
    sink = CsvSink(_outpath(cfg, "trace.csv"), TRACE_COLUMNS, _header(cfg, p, {
        "tau_prep_s": m["tau_prep"], "beta_p_rad_s": m["beta_p"], "omega_drive_rad_s": m["omega_drive"],
        "q_d": m["q_d"], "dt_s": m["dt"], "omega_d_sign": m["omega_d_sign"],
    }))
    for row in zip(trace.times, trace.fidelity, trace.vacuum_population, trace.leakage, trace.norm_drift):
        sink.row([_fmt(x) for x in row])
    i = trace.at(tau)
    sink.comment(f"fidelity_at_tau_prep: {_fmt(trace.fidelity[i])}")
    sink.close()
    print(f"wrote {sink.path}; tau_prep = {tau:.6g} s, F(tau_prep) = {trace.fidelity[i]:.9f}, "
          f"max F = {trace.fidelity.max():.9f}")
    return EXIT_OK


def cmd_sweetspot_check(cfg: dict) -> int:
    p = build_params(cfg)
    if cfg["physical"]["delta"] is not None and not p.is_sweet_spot():
        raise ConfigError("sweetspot-check runs at the sweet spot; leave physical.delta unset")
    outcomes = sweetspot_checks(p, cfg["run"]["check_lambdas"], seed=cfg["run"]["seed"])
    for o in outcomes:
        print(f"{'PASS' if o.passed else 'FAIL'}  {o.name}: {o.value:.3e} (<= {o.threshold:g})")
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_RUNTIME


COMMANDS = {
    "derive": cmd_derive,
    "scan": cmd_scan,
    "protocol": cmd_protocol,
    "sweetspot-check": cmd_sweetspot_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rydberg-wstate", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="JSON config file")
        sp.add_argument("--paper-scale", action="store_true", help="override N=10, M=8")
        sp.add_argument("-o", "--output-dir", help="override output.directory")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.paper_scale:
            cfg["run"].update(PAPER_SCALE)
        if args.output_dir:
            cfg["output"]["directory"] = args.output_dir
        return COMMANDS[args.command](cfg)
    except (ConfigError, ParameterError, InvalidMomentumError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScanError, NoConvergenceError, StepSizeError, CapacityError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
