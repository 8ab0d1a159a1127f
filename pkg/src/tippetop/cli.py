"""Command line entry point: ``tippetop {simulate,potential,period,verify}``.

Exit codes: 0 ok, 2 invalid config, 3 integration ended abnormally,
4 regime violation or failed verification.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from .dynamics import FrictionModel, conservation_report, detect_inversion, integrate
from .errors import RegimeError, TippeTopError
from .model import GlideState, TopParameters, boundary_values, jellett, lambda_threshold
from .nutation import oscillation_condition, period_report
from .potential import delta_minus, delta_plus, find_minimum, minimum_path, v_rational

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_FAILURE = 0, 2, 3, 4

TRAJECTORY_COLUMNS = ["t", "theta", "theta_dot", "phi_dot", "omega3", "nu_x", "nu_y",
                      "g_n", "lambda", "D", "E_tilde", "E_total"]

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

TOP_SCHEMA = {
    "type": "object",
    "properties": {
        "m": _POSITIVE, "R": _POSITIVE, "alpha": _NUMBER, "I3": _POSITIVE, "I1": _POSITIVE,
        "g": _POSITIVE, "rational": {"type": "boolean"},
    },
    "required": ["m", "R", "alpha", "I3"],
    "additionalProperties": False,
}

STATE_SCHEMA = {
    "type": "object",
    "properties": {k: _NUMBER for k in ("theta", "theta_dot", "phi_dot", "omega3", "nu_x", "nu_y")},
    "required": ["theta", "omega3"],
    "additionalProperties": False,
}

RUN_SCHEMA = {
    "type": "object",
    "properties": {
        "top": TOP_SCHEMA,
        "mu": {"type": "number", "minimum": 0},
        "initial": STATE_SCHEMA,
        "t_end": _POSITIVE,
        "rtol": _POSITIVE,
        "atol": _POSITIVE,
        "sample_dt": _POSITIVE,
        "output": {"type": "string", "minLength": 1},
    },
    "required": ["top", "mu", "initial", "t_end"],
    "additionalProperties": False,
}

ANALYSIS_SCHEMA = {
    "type": "object",
    "properties": {
        "top": TOP_SCHEMA,
        "lambda": _POSITIVE,
        "initial": STATE_SCHEMA,
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "d_grid": {"type": "integer", "minimum": 2},
        "scan_D": {"type": "array", "items": _NUMBER},
        "z_points": {"type": "integer", "minimum": 3},
        "e_offsets": {"type": "array", "items": {"type": "number", "minimum": 0}},
    },
    "required": ["top"],
    "additionalProperties": False,
}

RUN_DEFAULTS = {"rtol": 1e-9, "atol": 1e-12, "sample_dt": 1e-3, "output": "trajectory.csv"}
ANALYSIS_DEFAULTS = {"epsilon": 0.1, "d_grid": 101, "z_points": 201, "e_offsets": [1e-4, 1e-3, 1e-2]}


class ConfigError(Exception):
    pass


def _reject_constant(name):
    raise ConfigError(f"non-finite number {name} in config")


def load_config(path, schema: dict, defaults: dict) -> dict:
    try:
        raw = json.loads(Path(path).read_text(), parse_constant=_reject_constant)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    errors = sorted(Draft202012Validator(schema).iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        where = "/".join(str(x) for x in errors[0].path) or "<root>"
        raise ConfigError(f"{where}: {errors[0].message}")
    return {**defaults, **raw}


def build_parameters(top: dict) -> TopParameters:
    has_i1 = "I1" in top
    rational = top.get("rational", False)
    if has_i1 == rational:
        raise ConfigError("top: give exactly one of I1 or \"rational\": true")
    extra = {"g": top["g"]} if "g" in top else {}
    try:
        if rational:
            return TopParameters.rational(top["m"], top["R"], top["alpha"], top["I3"], **extra)
        return TopParameters(top["m"], top["R"], top["alpha"], top["I1"], top["I3"], **extra)
    except ValueError as exc:
        raise ConfigError(f"top: {exc}") from exc


def build_state(initial: dict) -> GlideState:
    try:
        return GlideState(**{"theta_dot": 0.0, "phi_dot": 0.0, "nu_x": 0.0, "nu_y": 0.0, **initial})
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from exc


def fmt(x) -> str:
    """Shortest round-trip decimal for a float."""
    return repr(float(x))


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, nan/inf to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def _analysis_lambda(cfg: dict, p: TopParameters) -> float:
    if ("lambda" in cfg) == ("initial" in cfg):
        raise ConfigError("give exactly one of lambda or initial")
    if "lambda" in cfg:
        return cfg["lambda"]
    lam = float(jellett(build_state(cfg["initial"]), p))
    if not lam > 0:
        raise ConfigError("initial state gives a non-positive Jellett value")
    return lam


def _d_range_report(traj, lam, p):
    if not lam > 0:
        return None
    bv = boundary_values(lam, p)
    return {"D_min": float(np.min(traj.D)), "D_max": float(np.max(traj.D)), "D0": bv.D0, "D1": bv.D1,
            "inside": bool(np.all((traj.D > bv.D1) & (traj.D < bv.D0)))}


def _oscillation_report(traj, inv, lam, p):
    if not (inv.completed and p.rational_regime and lam > 0):
        return None
    i = int(np.searchsorted(traj.t, inv.onset_time))
    try:
        ratio, verdict = oscillation_condition(inv.inversion_time, float(traj.D[i]), lam, p)
    except TippeTopError as exc:
        return {"error": type(exc).__name__}
    return {"D_at_onset": float(traj.D[i]), "ratio": ratio, "verdict": verdict}


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, RUN_SCHEMA, RUN_DEFAULTS)
    p = build_parameters(cfg["top"])
    s0 = build_state(cfg["initial"])
    friction = FrictionModel(cfg["mu"])
    try:
        traj = integrate(s0, p, friction, cfg["t_end"], rtol=cfg["rtol"], atol=cfg["atol"],
                         sample_dt=cfg["sample_dt"])
    except TippeTopError as exc:
        raise ConfigError(f"initial state is not admissible: {type(exc).__name__}: {exc}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / cfg["output"]
    columns = np.column_stack([traj.t, traj.y, traj.g_n, traj.lam, traj.D, traj.E_tilde, traj.E_total])
    write_csv(csv_path, TRAJECTORY_COLUMNS, columns)
    inv = detect_inversion(traj)
    sidecar = {
        "config": cfg,
        "integration": dataclasses.asdict(traj.meta),
        "inversion": inv._asdict(),
        "conservation": conservation_report(traj)._asdict() if len(traj) >= 3 else None,
        "routh_range": _d_range_report(traj, float(traj.lam[0]), p),
        "oscillation_condition": _oscillation_report(traj, inv, float(traj.lam[0]), p),
    }
    write_json(csv_path.with_suffix(".json"), sidecar)
    print(f"{csv_path}: {len(traj)} samples, {traj.meta.reason}; inversion completed={inv.completed}")
    return EXIT_OK if traj.completed else EXIT_INTEGRATION


def _scan_values(cfg, bv):
    if "scan_D" in cfg:
        return [float(D) for D in cfg["scan_D"]]
    return [bv.D1 + f * (bv.D0 - bv.D1) for f in (0.25, 0.5, 0.75)]


def cmd_potential(args) -> int:
    cfg = load_config(args.config, ANALYSIS_SCHEMA, ANALYSIS_DEFAULTS)
    p = build_parameters(cfg["top"])
    lam = _analysis_lambda(cfg, p)
    p.require_rational()
    bv = boundary_values(lam, p)
    eps = cfg["epsilon"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    z = np.linspace(-1, 1, cfg["z_points"] + 2)[1:-1]
    rows = [(D, zi, vi) for D in _scan_values(cfg, bv) for zi, vi in zip(z, v_rational(z, D, lam, p))]
    write_csv(out / "potential_scan.csv", ["D", "z", "V"], rows)
    write_csv(out / "minimum_path.csv", ["D", "z_min"], minimum_path(lam, p, cfg["d_grid"]))
    try:
        dm = delta_minus(eps, lam, p)
    except TippeTopError as exc:
        dm = None
        print(f"delta_minus unavailable: {exc}", file=sys.stderr)
    summary = {
        "config": cfg, "lambda": lam, "lambda_thres": lambda_threshold(p), "gamma": p.gamma,
        "D0": bv.D0, "D1": bv.D1, "E_tilde_0": bv.E_tilde_0, "E_tilde_1": bv.E_tilde_1,
        "epsilon": eps, "delta_minus": dm, "delta_plus": delta_plus(eps, lam, p),
    }
    write_json(out / "potential.json", summary)
    print(f"{out}: D0={fmt(bv.D0)} D1={fmt(bv.D1)} delta_minus={dm!r}")
    return EXIT_OK


PERIOD_COLUMNS = ["D", "E_tilde", "z1", "z2", "z3", "k2", "K", "T_exact", "T_elliptic_low",
                  "T_elliptic_mid", "T_elliptic_high", "T_max", "T_upp", "epsilon", "w", "flag"]


def cmd_period(args) -> int:
    cfg = load_config(args.config, ANALYSIS_SCHEMA, ANALYSIS_DEFAULTS)
    p = build_parameters(cfg["top"])
    lam = _analysis_lambda(cfg, p)
    p.require_rational()
    bv = boundary_values(lam, p)
    # the open segment (D1, D0); its endpoints have their minimum at the poles
    Ds = np.linspace(bv.D1, bv.D0, cfg["d_grid"] + 2)[1:-1]
    mgR = p.m * p.g * p.R
    rows = []
    for D in Ds:
        v_min = v_rational(find_minimum(D, lam, p), D, lam, p)
        for off in [0.0, *cfg["e_offsets"]]:
            E = v_min + off * mgR
            try:
                r = period_report(E, D, lam, p)
                rows.append([D, E, *r[:-1], r.flag])
            except TippeTopError as exc:
                rows.append([D, E, *([math.nan] * 13), type(exc).__name__])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "period.csv", PERIOD_COLUMNS, rows)
    records = [dict(zip(PERIOD_COLUMNS, r)) for r in rows]
    write_json(out / "period.json", {"config": cfg, "lambda": lam, "rows": records})
    print(f"{out / 'period.csv'}: {len(rows)} rows")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_all

    results = run_all(seed=args.seed, jobs=args.jobs)
    for r in results:
        print(r.line())
        for c in r.checks:
            mark = "ok  " if c.passed else "FAIL"
            print(f"    {mark} {c.label}: {c.value!r} ({c.bound})")
    failed = [r.key for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed" + (f"; failed: {' '.join(failed)}" if failed else ""))
    return EXIT_FAILURE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tippetop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (("simulate", cmd_simulate, True), ("potential", cmd_potential, True),
                                   ("period", cmd_period, True), ("verify", cmd_verify, False)):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=needs_config, help="JSON configuration file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
