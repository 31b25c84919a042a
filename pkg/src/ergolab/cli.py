"""Batch front end.

Each subcommand validates its configuration, runs one computation and
writes ``<name>.json`` (inputs echoed with defaults filled in, outputs,
library version), plus ``<name>.csv`` for convergence traces.  Wall-clock
times and the thread count go to ``<name>.timing.json`` so that the report
itself is byte-identical for every ``--threads`` value.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .averaging import (
    DEFAULT_TABLE_CAP,
    DEFAULT_WINDOW,
    LinearAction,
    ap_average,
    birkhoff_average,
    convergence_trace,
    cube_face_average,
    cube_full_average,
    folner_box_average,
)
from .cubes import CubeIndex, cube_pattern_language
from .diagnostics import DEFAULT_PROBE_THRESHOLD, equidistribution_test, tempered_check_boxes, unique_ergodicity_probe
from .errors import CapExceeded, ConfigError, ErgolabError, NumericalFailure
from .cubes import DEFAULT_LANGUAGE_CAP
from .reduction import DEFAULT_GRID_CAP, check_cap
from .seminorms import DEFAULT_COST_CAP, DEFAULT_SUPPORT_CAP
from .systems.substitution import DEFAULT_HORIZON_CAP
from .limits import (
    DEFAULT_TUPLE_CAP,
    predicted_limit,
    rotation_ap_limit,
    rotation_cube_face_limit,
    rotation_cube_full_limit,
    wm_product_limit,
)
from .seminorms import HilbertSequence, hk_seminorm_empirical, hk_seminorm_rotation_exact, vdc_bound_check
from .systems import (
    CirclePoint,
    CylinderFunc,
    Product,
    Rotation,
    SkewProduct,
    Substitution,
    SubstitutionSubshift,
    ToralAutomorphism,
    TorusPoint,
    TrigPoly,
)

OUTPUT_DIR_ENV = "ERGOLAB_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CAP = 0, 2, 3, 4
COMMANDS = ("average", "limit", "seminorm", "probe", "cube-language", "vdc", "tempered", "equidistribution")
KINDS = ("birkhoff", "folner", "ap", "cube-face", "cube-full")
CSV_COLUMNS = ["N", "value_re", "value_im", "tail_spread", "predicted_re", "predicted_im", "abs_error"]

# options whose values may start with '-' (negative frequencies)
_VALUE_FLAGS = ("--f", "--face", "--g", "--x", "--s", "--coeffs", "--include")


# ---------------------------------------------------------------- parsing


def parse_system(spec: str, horizon_cap: int = DEFAULT_HORIZON_CAP):
    """'rotation:golden[,sqrt2]', 'skew:golden', 'cat', 'toral:2,1,1,1',
    'substitution:thue-morse', 'product:<spec>*<spec>'."""
    name, _, arg = spec.strip().partition(":")
    name = name.lower()
    try:
        if name == "rotation":
            return Rotation(tuple((arg or "golden").split(",")))
        if name in ("skew", "skew-product"):
            return SkewProduct(arg or "golden")
        if name == "cat":
            return ToralAutomorphism()
        if name == "toral":
            a, b, c, d = (int(v) for v in arg.split(","))
            return ToralAutomorphism(((a, b), (c, d)))
        if name == "substitution":
            return SubstitutionSubshift(Substitution.named(arg or "thue-morse", horizon_cap=horizon_cap))
        if name == "product":
            left, sep, right = arg.partition("*")
            if not sep:
                raise ConfigError("product systems are written product:<left>*<right>")
            return Product(parse_system(left, horizon_cap), parse_system(right, horizon_cap))
    except ErgolabError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"system: cannot parse {spec!r}: {exc}") from None
    raise ConfigError(f"system: unknown system {spec!r}")


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) not in (1, 2):
        raise ConfigError(f"coefficient {text!r} must be 're' or 're,im'")
    return complex(float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0)


def parse_observable(text: str, sys):
    """'freq:re[,im];...' for torus systems, 'word=re[,im];...' for subshifts."""
    terms = [t.strip() for t in str(text).split(";") if t.strip()]
    if not terms:
        raise ConfigError("empty observable")
    try:
        if isinstance(sys, SubstitutionSubshift):
            table = {}
            for t in terms:
                word, sep, coef = t.partition("=")
                if not sep:
                    raise ConfigError(f"subshift observable term {t!r} must be word=value")
                table[word] = _parse_complex(coef)
            return CylinderFunc(table)
        coeffs = {}
        for t in terms:
            freq, sep, coef = t.partition(":")
            if not sep:
                raise ConfigError(f"torus observable term {t!r} must be freq:value")
            k = tuple(int(v) for v in freq.split(","))
            coeffs[k] = coeffs.get(k, 0) + _parse_complex(coef)
        f = TrigPoly(coeffs)
    except ValueError as exc:
        raise ConfigError(f"cannot parse observable {text!r}: {exc}") from None
    if f.dim != sys.dim:
        raise ConfigError(f"observable {text!r} has dimension {f.dim}, system has {sys.dim}")
    return f


def parse_schedule(value) -> list[int]:
    if isinstance(value, int):
        out = [value]
    elif isinstance(value, (list, tuple)):
        out = [int(v) for v in value]
    else:
        text = str(value)
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
            if lo < 1 or hi < lo:
                raise ConfigError(f"N: bad range {text!r}")
            out = []
            n = lo
            while n <= hi:
                out.append(n)
                n *= 2
        else:
            out = [int(v) for v in text.split(",")]
    if not out or out[0] < 1 or any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"N: schedule must be increasing positive integers, got {value!r}")
    return out


def parse_point(value, sys, seed: int):
    if value is None:
        return sys.random_point(np.random.default_rng(seed))
    if isinstance(sys, SubstitutionSubshift):
        return sys.point(int(value))
    coords = value if isinstance(value, (list, tuple)) else str(value).split(",")
    return sys.point(*(v if isinstance(v, (int, float)) else v.strip() for v in coords))


def point_json(x):
    if isinstance(x, TorusPoint):
        return {"turns": list(x.turns), "raw": [str(r) for r in x.raw]}
    if isinstance(x, CirclePoint):
        return {"turns": [x.turns], "raw": [str(x.frac)]}
    return {"offset": x.offset}


def cjson(z) -> list[float] | None:
    if z is None:
        return None
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------- config


DEFAULTS = {
    "system": "rotation:golden",
    "kind": "birkhoff",
    "d": None,
    "f": [],
    "face": {},
    "x": None,
    "seed": 0,
    "N": "64..4096",
    "window": DEFAULT_WINDOW,
    "tolerance": 1e-2,
    "k": 2,
    "method": "exact",
    "H": None,
    "coeffs": None,
    "points": 16,
    "include": [],
    "threshold": DEFAULT_PROBE_THRESHOLD,
    "L": 1,
    "nmax": 64,
    "enumerate": False,
    "horizon_cap": DEFAULT_HORIZON_CAP,
    "grid_cap": DEFAULT_GRID_CAP,
    "table_cap": DEFAULT_TABLE_CAP,
    "cost_cap": DEFAULT_COST_CAP,
    "language_cap": DEFAULT_LANGUAGE_CAP,
    "name": None,
    "out": None,
    "csv": True,
    "threads": 1,
}

# parameters each command echoes into its report
ECHO = {
    "average": ["system", "kind", "d", "f", "face", "x", "seed", "N", "window", "tolerance", "coeffs",
                "grid_cap", "table_cap", "horizon_cap"],
    "limit": ["system", "kind", "d", "f", "face", "x", "seed", "horizon_cap"],
    "seminorm": ["system", "f", "k", "method", "N", "H", "x", "seed", "cost_cap", "horizon_cap"],
    "probe": ["system", "f", "coeffs", "points", "include", "seed", "N", "threshold", "grid_cap", "table_cap",
              "horizon_cap"],
    "cube-language": ["system", "d", "L", "N", "language_cap", "horizon_cap"],
    "vdc": ["system", "f", "x", "seed", "N", "H", "tolerance", "table_cap", "horizon_cap"],
    "tempered": ["d", "nmax", "enumerate"],
    "equidistribution": ["system", "k", "x", "seed", "N", "table_cap", "horizon_cap"],
}
# library caps that are not configurable but bound the work; echoed for provenance
FIXED_CAPS = {
    "limit": {"tuple_cap": DEFAULT_TUPLE_CAP},
    "seminorm": {"support_cap": DEFAULT_SUPPORT_CAP},
}


def _face_dict(value) -> dict:
    if isinstance(value, dict):
        return {str(k): v for k, v in value.items()}
    out = {}
    for item in value or []:
        eps, sep, obs = item.partition("=")
        if not sep:
            raise ConfigError(f"face: {item!r} must be EPS=observable, e.g. 10=1:1")
        out[eps.strip()] = obs
    return out


def build_config(command: str, file_cfg: dict, cli: dict) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items() if k != "command"})
    for k, v in cli.items():
        if v is not None and k in DEFAULTS:
            cfg[k] = v
    cfg["face"] = _face_dict(cfg["face"])
    if isinstance(cfg["f"], str):
        cfg["f"] = [cfg["f"]]
    return validate(command, cfg)


def validate(command: str, cfg: dict) -> dict:
    if command not in COMMANDS:
        raise ConfigError(f"command: unknown command {command!r}")
    caps = ("horizon_cap", "grid_cap", "table_cap", "cost_cap", "language_cap")
    int_keys = ("d", "L", "nmax", "points", "window", "threads", "seed") + caps
    if command != "equidistribution":
        int_keys += ("k",)
    for key in int_keys:
        v = cfg.get(key)
        if v is not None and not isinstance(v, int):
            try:
                cfg[key] = int(v)
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: expected an integer, got {v!r}") from None
    if cfg["d"] is not None and cfg["d"] < 1:
        raise ConfigError(f"d: must be >= 1, got {cfg['d']}")
    for key in caps:
        if cfg[key] < 1:
            raise ConfigError(f"{key}: must be >= 1")
    if cfg["threads"] < 1:
        raise ConfigError("threads: must be >= 1")
    if cfg["window"] < 1:
        raise ConfigError("window: must be >= 1")
    if command in ("average", "limit"):
        if cfg["kind"] not in KINDS:
            raise ConfigError(f"kind: must be one of {KINDS}, got {cfg['kind']!r}")
        if cfg["kind"] in ("cube-face", "cube-full") and cfg["d"] is None:
            lens = {len(e) for e in cfg["face"]}
            if len(lens) != 1:
                raise ConfigError("d: required for cube averages (or give faces)")
            cfg["d"] = lens.pop()
        if cfg["kind"] == "ap" and cfg["d"] is None:
            cfg["d"] = len(cfg["f"])
        if cfg["kind"] == "ap" and cfg["d"] != len(cfg["f"]):
            raise ConfigError(f"d: AP average of order {cfg['d']} needs {cfg['d']} --f observables, got {len(cfg['f'])}")
        if cfg["kind"] in ("birkhoff", "folner") and len(cfg["f"]) != 1:
            raise ConfigError("f: exactly one observable is needed")
    if command == "seminorm" and cfg["method"] not in ("exact", "empirical"):
        raise ConfigError("method: must be 'exact' or 'empirical'")
    if command == "seminorm" and cfg["k"] < 1:
        raise ConfigError("k: must be >= 1")
    if command in ("tempered", "cube-language") and cfg["d"] is None:
        raise ConfigError("d: required")
    cfg["N"] = parse_schedule(cfg["N"])
    if cfg["H"] is not None:
        cfg["H"] = int(cfg["H"])
        if cfg["H"] < 1:
            raise ConfigError("H: must be >= 1")
    if isinstance(cfg["coeffs"], str):
        cfg["coeffs"] = [int(v) for v in cfg["coeffs"].split(",")]
    if command == "probe" and cfg["coeffs"] is None:
        cfg["coeffs"] = [1, 2]
    if command == "average" and cfg["kind"] == "folner" and cfg["coeffs"] is None:
        cfg["coeffs"] = [1] * (cfg["d"] or 1)
    return cfg


# ---------------------------------------------------------------- commands


def _observables(cfg, sys):
    return [parse_observable(t, sys) for t in cfg["f"]]


def _faces(cfg, sys):
    d = cfg["d"]
    return {CubeIndex.parse(e, d).bits: parse_observable(t, sys) for e, t in cfg["face"].items()}


def _average_closure(cfg, sys, x, threads):
    kind, d = cfg["kind"], cfg["d"]
    if kind == "birkhoff":
        (f,) = _observables(cfg, sys)
        return (lambda N: birkhoff_average(sys, f, x, N, threads=threads)), [f]
    if kind == "folner":
        (f,) = _observables(cfg, sys)
        coeffs = cfg["coeffs"] or [1] * (d or 1)
        action = LinearAction(sys, coeffs)
        return (lambda N: folner_box_average(action, f, x, N, threads=threads)), [f]
    cap = cfg["grid_cap"]
    if kind == "ap":
        fs = _observables(cfg, sys)
        return (lambda N: ap_average(sys, fs, x, N, threads=threads, cap=cap)), fs
    faces = _faces(cfg, sys)
    fn = cube_face_average if kind == "cube-face" else cube_full_average
    return (lambda N: fn(sys, faces, x, N, d=d, threads=threads, cap=cap)), faces


def _limit_for(cfg, sys, x, fs):
    kind = cfg["kind"]
    if kind == "folner":
        if sys.weakly_mixing:
            return wm_product_limit(sys, fs, "birkhoff")
        return predicted_limit(sys, "birkhoff", fs)
    return predicted_limit(sys, kind, fs, d=cfg["d"], x=x)


def _precheck_average(cfg, sys):
    """Fail fast with CapExceeded before any work on the largest N."""
    kind, d, N = cfg["kind"], cfg["d"], cfg["N"][-1]
    if kind == "birkhoff":
        D, span = 1, 1
    elif kind == "folner":
        coeffs = cfg["coeffs"] or [1] * (d or 1)
        D, span = len(coeffs), sum(abs(c) for c in coeffs)
    elif kind == "ap":
        D, span = 2, d
    else:
        D, span = d, d
    check_cap(N, D, cfg["grid_cap"])
    if span * N > cfg["table_cap"]:
        raise CapExceeded(f"orbit table of about {span * N} values exceeds cap {cfg['table_cap']}")


def cmd_average(cfg, threads):
    sys = parse_system(cfg["system"], cfg["horizon_cap"])
    _precheck_average(cfg, sys)
    x = parse_point(cfg["x"], sys, cfg["seed"])
    fn, fs = _average_closure(cfg, sys, x, threads)
    lim = _limit_for(cfg, sys, x, fs)
    predicted = lim.at(x) if lim is not None else None
    report = convergence_trace(fn, cfg["N"], predicted, lim.formula if lim else None, cfg["window"], cfg["kind"])
    errors = report.abs_errors()
    trace = [
        {
            "N": N,
            "value": cjson(v),
            "tail_spread": report.spread_at(i),
            "abs_error": errors[i],
        }
        for i, (N, v) in enumerate(zip(report.schedule, report.values))
    ]
    results = {
        "kind": cfg["kind"],
        "point": point_json(x),
        "trace": trace,
        "final": cjson(report.final),
        "tail_spread": report.tail_spread,
        "predicted_limit": cjson(predicted),
        "formula": report.formula,
        "abs_error": report.abs_error,
        "within_tolerance": None if report.abs_error is None else report.abs_error <= cfg["tolerance"],
        "failed": report.failed,
        "message": report.message,
    }
    rows = [
        [
            N,
            repr(v.real),
            repr(v.imag),
            repr(report.spread_at(i)),
            "" if predicted is None else repr(predicted.real),
            "" if predicted is None else repr(predicted.imag),
            "" if errors[i] is None else repr(errors[i]),
        ]
        for i, (N, v) in enumerate(zip(report.schedule, report.values))
    ]
    if report.failed:
        raise NumericalFailure(report.message)
    return results, rows, report.elapsed


def _limit_json(lim, x):
    out = {"formula": lim.formula, "assumptions": sorted(lim.assumptions), "info": lim.info}
    if isinstance(lim.value, TrigPoly):
        out["trig_poly"] = [[list(k), cjson(c)] for k, c in lim.value.coeffs.items()]
        out["depends_on_x"] = lim.depends_on_x
        out["value_at_x"] = cjson(lim.at(x))
    else:
        out["value"] = cjson(lim.value)
    return out


def cmd_limit(cfg, threads):
    sys = parse_system(cfg["system"], cfg["horizon_cap"])
    x = parse_point(cfg["x"], sys, cfg["seed"])
    kind = cfg["kind"]
    if kind in ("cube-face", "cube-full"):
        fs = _faces(cfg, sys)
    else:
        fs = _observables(cfg, sys)
    if sys.weakly_mixing:
        lim = wm_product_limit(sys, fs, "birkhoff" if kind == "folner" else kind)
    elif kind == "ap":
        lim = rotation_ap_limit(sys, fs)
    elif kind == "cube-face":
        lim = rotation_cube_face_limit(sys, fs, cfg["d"])
    elif kind == "cube-full":
        lim = rotation_cube_full_limit(sys, fs, cfg["d"])
    else:
        lim = predicted_limit(sys, "birkhoff", fs)
        if lim is None:
            raise ConfigError("system: no closed-form limit for this system")
    return {"point": point_json(x), **_limit_json(lim, x)}, None, []


def cmd_seminorm(cfg, threads):
    sys = parse_system(cfg["system"], cfg["horizon_cap"])
    (f,) = _observables(cfg, sys)
    if cfg["method"] == "exact":
        res = hk_seminorm_rotation_exact(f, cfg["k"], sys)
        point = None
    else:
        x = parse_point(cfg["x"], sys, cfg["seed"])
        N = cfg["N"][-1]
        H = cfg["H"] or N
        res = hk_seminorm_empirical(sys, f, cfg["k"], N, H, x=x, cost_cap=cfg["cost_cap"])
        point = point_json(x)
        if res.numerical_failure:
            raise NumericalFailure(f"negative seminorm surrogate {-res.clamped:.3e} beyond tolerance")
    return {
        "k": res.k,
        "value": res.value,
        "raw": res.raw,
        "method": res.method,
        "params": res.params,
        "clamped": res.clamped,
        "point": point,
    }, None, []


def cmd_probe(cfg, threads):
    sys = parse_system(cfg["system"], cfg["horizon_cap"])
    (f,) = _observables(cfg, sys)
    rng = np.random.default_rng(cfg["seed"])
    pts = [parse_point(p, sys, 0) for p in cfg["include"]]
    pts += [sys.random_point(rng) for _ in range(cfg["points"])]
    action = LinearAction(sys, cfg["coeffs"])
    N = cfg["N"][-1]
    check_cap(N, len(cfg["coeffs"]), cfg["grid_cap"])
    if N * sum(abs(c) for c in cfg["coeffs"]) > cfg["table_cap"]:
        raise CapExceeded(f"orbit tables for N={N} exceed cap {cfg['table_cap']}")
    rep = unique_ergodicity_probe(action, f, pts, cfg["N"], cfg["threshold"], threads=threads)
    witness = rep.witness
    return {
        "points": [point_json(p) for p in pts],
        "top_values": [cjson(v) for v in rep.top_values],
        "values": [[cjson(v) for v in row] for row in rep.values],
        "spread": rep.spread,
        "verdict": rep.verdict,
        "witness": None if witness is None else [point_json(pts[i]) for i in witness],
    }, None, []


def cmd_cube_language(cfg, threads):
    sys = parse_system(cfg["system"], cfg["horizon_cap"])
    if not isinstance(sys, SubstitutionSubshift):
        raise ConfigError("system: cube-language needs a substitution subshift")
    # language size along the schedule: how fast finite boxes saturate
    sizes = [len(cube_pattern_language(sys, cfg["d"], cfg["L"], n, cap=cfg["language_cap"])) for n in cfg["N"][:-1]]
    N = cfg["N"][-1]
    lang = cube_pattern_language(sys, cfg["d"], cfg["L"], N, cap=cfg["language_cap"])
    saturation = [{"N": n, "size": k} for n, k in zip(cfg["N"], sizes + [len(lang)])]
    return {"N": N, "size": len(lang), "patterns": sorted(list(p) for p in lang), "saturation": saturation}, None, []


def cmd_vdc(cfg, threads):
    sys = parse_system(cfg["system"], cfg["horizon_cap"])
    fs = _observables(cfg, sys)
    x = parse_point(cfg["x"], sys, cfg["seed"])
    N = cfg["N"][-1]
    H = cfg["H"] or N
    if N + H > cfg["table_cap"]:
        raise CapExceeded(f"sequence of {N + H} terms exceeds cap {cfg['table_cap']}")
    seq = HilbertSequence.from_orbit(sys, fs, x, N + H)
    res = vdc_bound_check(seq, N, H, cfg["tolerance"])
    return {"point": point_json(x), "N": N, "H": H, "lhs": res.lhs, "rhs": res.rhs, "holds": res.holds,
            "slack": res.slack}, None, []


def cmd_tempered(cfg, threads):
    res = tempered_check_boxes(cfg["d"], cfg["nmax"], cfg["enumerate"])
    C = res.C_observed
    return {"C_observed": float(C), "C_observed_exact": f"{C.numerator}/{C.denominator}",
            "C": 2 ** cfg["d"], "holds": res.holds}, None, []


def cmd_equidistribution(cfg, threads):
    sys = parse_system(cfg["system"], cfg["horizon_cap"])
    x = parse_point(cfg["x"], sys, cfg["seed"])
    k = cfg["k"] if isinstance(cfg["k"], (list, tuple)) else [int(v) for v in str(cfg["k"]).split(",")]
    N = cfg["N"][-1]
    if N > cfg["table_cap"]:
        raise CapExceeded(f"N={N} exceeds cap {cfg['table_cap']}")
    return {"point": point_json(x), "N": N, "k": k, "weyl_sum": equidistribution_test(sys, k, x, N)}, None, []


HANDLERS = {
    "average": cmd_average,
    "limit": cmd_limit,
    "seminorm": cmd_seminorm,
    "probe": cmd_probe,
    "cube-language": cmd_cube_language,
    "vdc": cmd_vdc,
    "tempered": cmd_tempered,
    "equidistribution": cmd_equidistribution,
}


def _echo(command: str, cfg: dict) -> dict:
    out = {k: cfg[k] for k in ECHO[command]}
    out.update(FIXED_CAPS.get(command, {}))
    return out


def run(command: str, cfg: dict) -> tuple[int, dict]:
    """Execute a validated configuration and write the report files."""
    threads = cfg["threads"]
    out_dir = Path(cfg["out"] or os.environ.get(OUTPUT_DIR_ENV) or ".")
    name = cfg["name"] or command
    t0 = time.perf_counter()
    code, status = EXIT_OK, "ok"
    results, rows, elapsed = None, None, []
    try:
        results, rows, elapsed = HANDLERS[command](cfg, threads)
    except NumericalFailure as exc:
        code, status, results = EXIT_NUMERICAL, f"numerical failure: {exc}", results
    except CapExceeded as exc:
        code, status = EXIT_CAP, f"cap exceeded: {exc}"
    except ConfigError as exc:
        code, status = EXIT_CONFIG, f"invalid config: {exc}"
    report = {
        "command": command,
        "library_version": __version__,
        "status": status,
        "config": _echo(command, cfg),
        "results": results,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{name}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if rows is not None and cfg["csv"]:
        with open(out_dir / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            w.writerows(rows)
    timing = {"threads": threads, "elapsed_total": time.perf_counter() - t0, "elapsed_per_N": elapsed}
    (out_dir / f"{name}.timing.json").write_text(json.dumps(timing, indent=2) + "\n")
    return code, report


def compare(a: dict, b: dict) -> dict:
    """Per-N differences between two reports of the same command and kind."""
    ka = (a.get("command"), (a.get("config") or {}).get("kind"))
    kb = (b.get("command"), (b.get("config") or {}).get("kind"))
    if ka != kb:
        raise ConfigError(f"cannot compare reports of different kinds: {ka} vs {kb}")
    ra, rb = a.get("results") or {}, b.get("results") or {}
    diffs = []
    if "trace" in ra and "trace" in rb:
        tb = {row["N"]: row for row in rb["trace"]}
        for row in ra["trace"]:
            if row["N"] in tb:
                va, vb = complex(*row["value"]), complex(*tb[row["N"]]["value"])
                diffs.append({"N": row["N"], "diff": abs(va - vb)})
    else:
        for key in sorted(set(ra) & set(rb)):
            va, vb = ra[key], rb[key]
            if isinstance(va, (int, float)) and isinstance(vb, (int, float)) and not isinstance(va, bool):
                diffs.append({"field": key, "diff": abs(va - vb)})
            elif isinstance(va, list) and isinstance(vb, list) and len(va) == len(vb) == 2:
                try:
                    diffs.append({"field": key, "diff": abs(complex(*va) - complex(*vb))})
                except TypeError:
                    pass
    return {
        "command": ka[0],
        "kind": ka[1],
        "diffs": diffs,
        "max_diff": max((d["diff"] for d in diffs), default=0.0),
        "top_diff": diffs[-1]["diff"] if diffs else None,
        "identical_results": ra == rb,
    }


# ---------------------------------------------------------------- argv


def _join_value_flags(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergolab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML file; flags override its keys")
        sp.add_argument("--system")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or .)")
        sp.add_argument("--name", help="report file stem")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--x", help="base point: comma-separated turns, or an offset for subshifts")
        sp.add_argument("--f", action="append", help="observable, 'freq:re[,im];...' or 'word=re[,im];...'")
        sp.add_argument("--N", help="schedule: '64..4096' (doubling), '64,128' or a single N")
        sp.add_argument("--horizon-cap", dest="horizon_cap", type=int, help="longest substitution prefix")
        sp.add_argument("--grid-cap", dest="grid_cap", type=int, help="most grid terms in one average")
        sp.add_argument("--table-cap", dest="table_cap", type=int, help="longest orbit table")
        return sp

    s = common(sub.add_parser("average", help="average along an N schedule"))
    s.add_argument("--kind", choices=KINDS)
    s.add_argument("--d", type=int)
    s.add_argument("--face", action="append", help="EPS=observable, EPS as in 10 (eps_1 first)")
    s.add_argument("--coeffs", help="folner action exponents, e.g. 1,2")
    s.add_argument("--window", type=int)
    s.add_argument("--tolerance", type=float)
    s.add_argument("--no-csv", dest="csv", action="store_const", const=False)

    s = common(sub.add_parser("limit", help="closed-form limit"))
    s.add_argument("--kind", choices=KINDS)
    s.add_argument("--d", type=int)
    s.add_argument("--face", action="append")

    s = common(sub.add_parser("seminorm", help="Host-Kra seminorm"))
    s.add_argument("--k", type=int)
    s.add_argument("--method", choices=("exact", "empirical"))
    s.add_argument("--H", type=int)
    s.add_argument("--cost-cap", dest="cost_cap", type=int)

    s = common(sub.add_parser("probe", help="unique-ergodicity probe"))
    s.add_argument("--coeffs")
    s.add_argument("--points", type=int)
    s.add_argument("--include", action="append", help="extra probe point (repeatable)")
    s.add_argument("--threshold", type=float)

    s = common(sub.add_parser("cube-language", help="cube pattern language of a subshift"))
    s.add_argument("--d", type=int)
    s.add_argument("--L", type=int)
    s.add_argument("--language-cap", dest="language_cap", type=int)

    s = common(sub.add_parser("vdc", help="van der Corput inequality check"))
    s.add_argument("--H", type=int)
    s.add_argument("--tolerance", type=float)

    s = sub.add_parser("tempered", help="tempered Folner check for boxes")
    s.add_argument("--config")
    s.add_argument("--d", type=int)
    s.add_argument("--nmax", type=int)
    s.add_argument("--enumerate", action="store_const", const=True)
    s.add_argument("--out")
    s.add_argument("--name")
    s.add_argument("--threads", type=int)

    s = common(sub.add_parser("equidistribution", help="Weyl sum along an orbit"))
    s.add_argument("--k")

    s = sub.add_parser("run", help="run a TOML config whose 'command' key names the subcommand")
    s.add_argument("config")
    s.add_argument("--out")
    s.add_argument("--name")
    s.add_argument("--threads", type=int)

    s = sub.add_parser("compare", help="compare two JSON reports")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--out", help="write the comparison JSON here")
    return p


def main(argv: list[str] | None = None) -> int:
    argv = _join_value_flags(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    cli = {k: v for k, v in vars(args).items() if k not in ("command", "config", "a", "b")}
    if args.command == "compare":
        try:
            a = json.loads(Path(args.a).read_text())
            b = json.loads(Path(args.b).read_text())
            summary = compare(a, b)
        except (OSError, json.JSONDecodeError, ConfigError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        text = json.dumps(summary, indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(text + "\n")
        print(text)
        return EXIT_OK
    try:
        file_cfg = {}
        if getattr(args, "config", None):
            file_cfg = tomllib.loads(Path(args.config).read_text())
        command = args.command
        if command == "run":
            command = file_cfg.get("command")
            if command is None:
                raise ConfigError("command: the config file must name a command")
        cfg = build_config(command, file_cfg, cli)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, report = run(command, cfg)
    print(json.dumps({"command": command, "status": report["status"]}))
    if code:
        print(f"error: {report['status']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
