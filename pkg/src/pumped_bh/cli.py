"""Command-line front end.

Usage::

    pumped-bh observables --config sweep.yaml --out observables.csv
    pumped-bh phase2 --axis1 J:0:80:200 --axis2 U:0:60:200 --workers 8
    pumped-bh dispersion --U 27.44 --J 56.27 --path G,M,X

Configuration is a flat YAML mapping; each key can be overridden by the flag
of the same name (underscores become dashes).  Every output starts with a
``#`` header echoing the resolved configuration, which can be fed back with
``--config`` to reproduce the payload.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, DomainError, PumpedBHError
from .hierarchy import build_green_system
from .lattice import (
    CONVENTIONS,
    NORMALIZATIONS,
    dispersion_curve,
    lattice_phase_diagram,
    parse_point,
)
from .oracle import FockSpec, coherence_poles, oracle_moments, oracle_steady_state, regression_poles
from .params import ModelParams, check_order
from .spectra import find_poles, single_cavity_phase_diagram
from .steady import observables, solve_steady_moments
from .sweep import Axis, parallel_map

logger = logging.getLogger("pumped_bh")

DEFAULT_CHI = 0.2

MODES = ("observables", "phase1", "phase2", "dispersion", "oracle-check")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

DEFAULTS = {
    "omega_c": 0.0,
    "U": 0.0,
    "J": 0.0,
    "gamma_p": 0.6,
    "chi": None,
    "gamma_l": None,
    "kappa": 1.0,
    "order": 4,
    "eps_stab": 1e-9,
    "format": "csv",
    "workers": 1,
    "dispersion_convention": "positive",
    "normalization": "z",
    "out": None,
}

MODE_DEFAULTS = {
    "observables": {"axis": "chi:0.005:0.3:60"},
    "phase1": {"axis1": "U:0:50:101", "axis2": "chi:0:0.3:31", "refine_tol": 1e-3},
    "phase2": {"axis1": "J:0:80:81", "axis2": "U:0:60:61", "refine_tol": 1e-3},
    "dispersion": {"path": "G,M,X", "samples": 100},
    "oracle-check": {"n_max": 16, "orders": "4,6", "tolerance": 0.05},
}

FLOAT_KEYS = {"omega_c", "U", "J", "gamma_p", "chi", "gamma_l", "kappa", "eps_stab",
              "refine_tol", "tolerance"}
INT_KEYS = {"order", "workers", "samples", "n_max"}


def fmt(x) -> str:
    """17 significant digits: exact float round trip."""
    if x is None:
        return "nan"
    return format(float(x) + 0.0, ".17g")  # no "-0"


# --------------------------------------------------------------------- config

def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pumped-bh", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", help="YAML file of key: value pairs")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--workers", type=int)
        p.add_argument("--order", type=int, help="truncation order L")
        p.add_argument("--eps-stab", type=float)
        p.add_argument("--dispersion-convention", choices=CONVENTIONS)
        p.add_argument("--normalization", choices=NORMALIZATIONS)
        for key in ("omega-c", "U", "J", "gamma-p", "chi", "gamma-l", "kappa"):
            p.add_argument(f"--{key}", type=float)
        for key in MODE_DEFAULTS[mode]:
            kind = float if key in FLOAT_KEYS else int if key in INT_KEYS else str
            p.add_argument(f"--{key.replace('_', '-')}", type=kind)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in FLOAT_KEYS:
            return float(value)
        if key in INT_KEYS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected a number, got {value!r}", key) from exc
    return str(value)


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", "config") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of key: value", "config")
    return data


def resolve_config(mode: str, file_values: dict, flag_values: dict) -> dict:
    """Merge defaults < config file < flags and validate every field."""
    allowed = dict(DEFAULTS, **MODE_DEFAULTS[mode])
    config = dict(allowed)
    file_values = dict(file_values)
    file_mode = file_values.pop("mode", mode)
    file_values.pop("version", None)
    if file_mode != mode:
        raise ConfigError(f"config is for mode {file_mode!r}, not {mode!r}", "mode")
    for source in (file_values, flag_values):
        gain_keys = {"chi", "gamma_l"} & {k for k, v in source.items() if v is not None}
        if gain_keys and len(gain_keys) == 1:
            # chi and gamma_l are alternatives; the later source replaces both
            config["chi"] = config["gamma_l"] = None
        for key, value in source.items():
            if key not in allowed:
                raise ConfigError("unknown key", key)
            if value is not None:
                config[key] = _coerce(key, value)
    if config["chi"] is None and config["gamma_l"] is None:
        config["chi"] = DEFAULT_CHI
    _validate(mode, config)
    return {"mode": mode, **config}


def _validate(mode, config):
    if config["format"] not in ("csv", "json"):
        raise ConfigError("must be csv or json", "format")
    if config["workers"] < 1:
        raise ConfigError("must be >= 1", "workers")
    if config["dispersion_convention"] not in CONVENTIONS:
        raise ConfigError(f"must be one of {CONVENTIONS}", "dispersion_convention")
    if config["normalization"] not in NORMALIZATIONS:
        raise ConfigError(f"must be one of {NORMALIZATIONS}", "normalization")
    if not config["eps_stab"] >= 0:
        raise ConfigError("must be non-negative", "eps_stab")
    try:
        check_order(config["order"])
    except DomainError as exc:
        raise ConfigError(str(exc), "order") from exc
    base_params(config)
    for key in ("axis", "axis1", "axis2"):
        if key in config:
            axis = Axis.parse(config[key]) if isinstance(config[key], str) else None
            if axis is None:
                raise ConfigError("expected name:min:max:count", key)
            if axis.name == "chi":
                gp = config["gamma_p"]
                if np.any(gp - 2 * axis.values < -1e-12):
                    raise ConfigError(f"chi values above gamma_p/2={gp / 2} make gamma_l negative", key)
    if mode == "observables" and Axis.parse(config["axis"]).name != "chi":
        raise ConfigError("observables sweeps chi", "axis")
    if mode == "phase1":
        if (Axis.parse(config["axis1"]).name, Axis.parse(config["axis2"]).name) != ("U", "chi"):
            raise ConfigError("phase1 needs axis1 over U and axis2 over chi", "axis1")
    if mode == "phase2" and Axis.parse(config["axis1"]).name == Axis.parse(config["axis2"]).name:
        raise ConfigError("axes must differ", "axis2")
    if mode == "dispersion":
        if config["samples"] < 1:
            raise ConfigError("must be >= 1", "samples")
        try:
            [parse_point(p) for p in config["path"].split(",")]
        except DomainError as exc:
            raise ConfigError(str(exc), "path") from exc
    if mode == "oracle-check":
        try:
            [check_order(int(o)) for o in str(config["orders"]).split(",")]
        except (ValueError, DomainError) as exc:
            raise ConfigError(str(exc), "orders") from exc
        if config["n_max"] < 1:
            raise ConfigError("must be >= 1", "n_max")


def base_params(config) -> ModelParams:
    common = {k: config[k] for k in ("omega_c", "U", "J", "kappa")}
    try:
        if config.get("gamma_l") is not None:
            params = ModelParams(gamma_p=config["gamma_p"], gamma_l=config["gamma_l"], **common)
            if config.get("chi") is not None and not math.isclose(params.chi, config["chi"], abs_tol=1e-12):
                raise ConfigError("chi and gamma_l are inconsistent; give only one", "gamma_l")
            return params
        return ModelParams.from_chi(config["gamma_p"], config["chi"], **common)
    except DomainError as exc:
        raise ConfigError(str(exc), "params") from exc


# --------------------------------------------------------------------- output

def header_lines(config) -> list:
    body = yaml.safe_dump({k: v for k, v in config.items()}, sort_keys=True,
                          default_flow_style=False).splitlines()
    return [f"# pumped_bh {__version__}", "# resolved config:"] + [f"#   {line}" for line in body]


def read_header_config(text: str) -> dict:
    """Recover the resolved configuration from an output file's header."""
    lines = []
    for line in text.splitlines():
        if line.startswith("#   "):
            lines.append(line[4:])
        elif lines and not line.startswith("#"):
            break
    return yaml.safe_load("\n".join(lines)) or {}


def payload_lines(text: str) -> list:
    return [line for line in text.splitlines() if not line.startswith("#")]


class Table:
    def __init__(self, name, columns, rows):
        self.name, self.columns, self.rows = name, columns, rows

    def csv(self) -> str:
        out = [",".join(self.columns)]
        for row in self.rows:
            out.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
        return "\n".join(out)

    def records(self):
        def clean(v):
            if isinstance(v, (float, np.floating)):
                v = float(v)
                return v if math.isfinite(v) else None
            if isinstance(v, np.integer):
                return int(v)
            return v
        return [dict(zip(self.columns, map(clean, row))) for row in self.rows]


def render(config, tables) -> str:
    if config["format"] == "json":
        doc = {"header": {"version": __version__, "config": config},
               **{t.name: t.records() for t in tables}}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    parts = ["\n".join(header_lines(config))]
    for i, table in enumerate(tables):
        if i:
            parts.append(f"# table: {table.name}")
        parts.append(table.csv())
    return "\n".join(parts) + "\n"


def write_output(config, tables):
    """Write the main table to ``out`` and, for CSV, extra tables next to it."""
    out = config.get("out")
    if out is None or config["format"] == "json" or len(tables) == 1:
        text = render(config, tables)
        if out is None:
            sys.stdout.write(text)
        else:
            with open(out, "w") as fh:
                fh.write(text)
        return
    with open(out, "w") as fh:
        fh.write(render(config, tables[:1]))
    stem = out[:-4] if out.endswith(".csv") else out
    for table in tables[1:]:
        with open(f"{stem}.{table.name}.csv", "w") as fh:
            fh.write(render(config, [table]))


# ---------------------------------------------------------------------- modes

def _observables_cell(task):
    params, L = task
    try:
        obs = observables(solve_steady_moments(params, L))
    except (PumpedBHError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return (math.nan, math.nan, f"failed:{type(exc).__name__}")
    return (obs.n, obs.g2 if obs.g2_defined else math.nan, "ok" if obs.g2_defined else "g2_undefined")


def run_observables(config):
    base, L = base_params(config), config["order"]
    axis = Axis.parse(config["axis"])
    tasks = [(base.with_chi(c), L) for c in axis.values]
    results = parallel_map(_observables_cell, tasks, config["workers"])
    rows = [(float(c), float(p.gamma_l), n, g2, status)
            for c, (p, _), (n, g2, status) in zip(axis.values, tasks, results)]
    failed = sum(r[-1].startswith("failed") for r in rows)
    return [Table("observables", ["chi", "gamma_l", "n", "g2", "status"], rows)], failed == len(rows)


def _grid_tables(diagram):
    a1, a2 = diagram.axis1, diagram.axis2
    rows = []
    for i, v2 in enumerate(a2.values):
        for j, v1 in enumerate(a1.values):
            rows.append((float(v2), float(v1), diagram.labels[i, j], float(diagram.max_im[i, j]),
                         diagram.modes[i, j] or "-", "failed" if diagram.failed[i, j] else "ok"))
    grid = Table("grid", [a2.name, a1.name, "label", "max_im", "mode", "status"], rows)
    brows = [(b.axis2_value, b.axis1_value, b.mode or "-", b.segment or "-", b.direction)
             for b in diagram.boundary]
    boundary = Table("boundary", [a2.name, a1.name, "mode", "segment", "direction"], brows)
    return [grid, boundary], bool(np.all(diagram.failed))


def run_phase1(config):
    axis1, axis2 = Axis.parse(config["axis1"]), Axis.parse(config["axis2"])
    diagram = single_cavity_phase_diagram(base_params(config), axis1.values, axis2.values,
                                          config["order"], config["eps_stab"], config["workers"],
                                          config["refine_tol"])
    return _grid_tables(diagram)


def run_phase2(config):
    diagram = lattice_phase_diagram(
        base_params(config), Axis.parse(config["axis1"]), Axis.parse(config["axis2"]),
        config["order"], config["eps_stab"], config["dispersion_convention"],
        config["normalization"], config["workers"], config["refine_tol"])
    return _grid_tables(diagram)


def run_dispersion(config):
    params, L = base_params(config), config["order"]
    path = [parse_point(p) for p in config["path"].split(",")]
    table = dispersion_curve(params, L, path, config["samples"],
                             config["dispersion_convention"], config["normalization"])
    cols = ["index", "distance", "kx", "ky", "sigma", "point"]
    cols += [f"re_{b + 1}" for b in range(L)] + [f"im_{b + 1}" for b in range(L)]
    rows = []
    for i, (k, d, s) in enumerate(zip(table.points, table.distance, table.sigma)):
        br = table.branches[i]
        rows.append((i, float(d), float(k.kx), float(k.ky), float(s), table.labels.get(i, "-"),
                     *map(float, br.real), *map(float, br.imag)))
    return [Table("dispersion", cols, rows)], False


def _rel(a, b):
    if a is None or b is None:
        return 0.0 if a is None and b is None else math.inf
    if b == 0:
        return 0.0 if a == 0 else math.inf
    return abs(a - b) / abs(b)


def run_oracle_check(config):
    params = base_params(config)
    tol = config["tolerance"]
    eps = config["eps_stab"]
    orders = [int(o) for o in str(config["orders"]).split(",")]
    fock = FockSpec(n_max=max(config["n_max"], 2 * max(orders)))
    liou, rho = oracle_steady_state(params, fock)
    liou2, rho2 = oracle_steady_state(params, FockSpec(n_max=liou.fock.n_max + 4))
    ref = observables(oracle_moments(rho, 2))
    ref2 = observables(oracle_moments(rho2, 2))
    rows = []
    conv = max(abs(ref.n - ref2.n), abs((ref.g2 or 0) - (ref2.g2 or 0)))
    rows.append(("oracle_nmax_convergence", f"n_max={liou.fock.n_max}->{liou2.fock.n_max}",
                 conv, 0.0, conv, "pass" if conv < 1e-8 else "warn"))
    rows.append(("n", "oracle", ref.n, ref.n, 0.0, "ref"))
    rows.append(("g2", "oracle", ref.g2 if ref.g2_defined else math.nan,
                 ref.g2 if ref.g2_defined else math.nan, 0.0, "ref"))
    oracle_set = coherence_poles(liou)
    dominant = regression_poles(liou, rho).dominant
    dom_im = float(np.max(dominant.imag)) if dominant.size else math.nan
    for L in orders:
        moments = solve_steady_moments(params, L)
        obs = observables(moments)
        for name, val, refv in (("n", obs.n, ref.n), ("g2", obs.g2, ref.g2)):
            dev = _rel(val, refv)
            rows.append((name, f"hierarchy_L{L}", math.nan if val is None else val,
                         math.nan if refv is None else refv, dev, "pass" if dev <= tol else "warn"))
        poles = find_poles(build_green_system(params, L, moments), eps)
        for b, w in enumerate(poles.poles):
            near = oracle_set[np.argmin(np.abs(oracle_set - w))]
            dist = abs(near - w) / max(abs(w), 1.0)
            rows.append((f"pole_{b + 1}_re", f"hierarchy_L{L}", w.real, near.real, dist, "info"))
            rows.append((f"pole_{b + 1}_im", f"hierarchy_L{L}", w.imag, near.imag, dist, "info"))
        rows.append(("max_im", f"hierarchy_L{L}", poles.max_im, dom_im, math.nan,
                     "stable" if poles.stable else "unstable"))
    rows.append(("max_im", "oracle_dominant", dom_im, dom_im, 0.0,
                 "stable" if dom_im < -eps else "unstable"))
    return [Table("oracle_check", ["quantity", "method", "value", "reference", "deviation", "flag"],
                  rows)], False


RUNNERS = {
    "observables": run_observables,
    "phase1": run_phase1,
    "phase2": run_phase2,
    "dispersion": run_dispersion,
    "oracle-check": run_oracle_check,
}


def run(config) -> int:
    """Execute a resolved configuration; returns the process exit status."""
    try:
        tables, all_failed = RUNNERS[config["mode"]](config)
    except ConfigError:
        raise
    except (PumpedBHError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    write_output(config, tables)
    return EXIT_NUMERIC if all_failed else EXIT_OK


def main(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items()
             if k not in ("mode", "config", "verbose") and v is not None}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        config = resolve_config(args.mode, file_values, flags)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
