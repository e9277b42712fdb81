"""Command-line front end.

Configs are flat JSON objects holding measure keys (``gamma``, ``sigma2``,
``plus``, ``minus``, ``atoms_plus``, ``atoms_minus``) and experiment keys.
Command-line flags override file values.  Exit codes: 0 all checks passed,
1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import diagnostics as dg
from .jump_sampler import sample_path
from .levy_measure import MEASURE_KEYS, DomainError, NumericalError, measure_from_dict
from .representation import sample_trimmed_asym_rep, sample_trimmed_mod_rep
from .smoother import is_diffuse, smooth_measure
from .stable_limits import norming
from .streams import stream
from .trimmer import trim_asymmetric, trim_modulus

EXPERIMENT_KEYS = frozenset({
    "mode", "r", "s", "t", "t_grid", "t_min", "n", "seed", "sampler", "reference", "alpha",
    "p_plus", "reference_n", "smooth", "tolerance", "block_size", "expected_jumps", "x_grid",
    "z_grid", "threads"})
SUBCOMMANDS = ("simulate", "represent", "trim", "smooth", "converge", "diagnose")


class ConfigError(Exception):
    pass


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - MEASURE_KEYS - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return doc


def merged_settings(args: argparse.Namespace) -> tuple[dict, dict]:
    """Split the config into measure and experiment parts and apply overrides."""
    doc = load_config(args.config)
    measure_doc = {k: v for k, v in doc.items() if k in MEASURE_KEYS}
    exp = {k: v for k, v in doc.items() if k in EXPERIMENT_KEYS}
    for key in ("t", "t_min", "r", "s", "n", "seed", "threads", "mode"):
        val = getattr(args, key, None)
        if val is not None:
            exp[key] = val
    if "seed" not in exp:
        env = os.environ.get("LEVYTRIM_SEED")
        if env is not None:
            try:
                exp["seed"] = int(env)
            except ValueError as exc:
                raise ConfigError(f"LEVYTRIM_SEED must be an integer, got {env!r}") from exc
    exp.setdefault("seed", 0)
    return measure_doc, exp


def _t_grid(exp: dict) -> list[float]:
    if "t_min" in exp:
        t_min = float(exp["t_min"])
        start = float(exp.get("t", 1e-2))
        if not 0 < t_min <= start:
            raise ConfigError("need 0 < t_min <= t")
        k = int(round(math.log10(start / t_min)))
        return [start * 10.0 ** -i for i in range(k + 1)]
    if "t_grid" in exp:
        return [float(t) for t in exp["t_grid"]]
    return [float(exp.get("t", 1e-2))]


def write_atomic(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".levytrim-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(dg._finite(rows), indent=2, default=dg._jsonable) + "\n"
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


# -- subcommands ---------------------------------------------------------------------

def cmd_simulate(measure, exp, fmt):
    t, n = float(exp.get("t", 1e-2)), int(exp.get("n", 10))
    rows = []
    for i in range(n):
        path = sample_path(measure, t, rng=stream(exp["seed"], "simulate", i))
        rows.append({"index": i, **path.summary()})
    return _table(rows, fmt), True


def cmd_trim(measure, exp, fmt):
    t, n = float(exp.get("t", 1e-2)), int(exp.get("n", 10))
    r, s, mode = int(exp.get("r", 1)), int(exp.get("s", 0)), exp.get("mode", "asymmetric")
    rows = []
    for i in range(n):
        path = sample_path(measure, t, rng=stream(exp["seed"], "trim", i))
        res = trim_modulus(path, r) if mode == "modulus" else trim_asymmetric(path, r, s)
        rows.append({"index": i, "value": path.value, "trimmed_value": res.trimmed_value,
                     "mode": res.mode})
    return _table(rows, fmt), True


def cmd_represent(measure, exp, fmt):
    t, n = float(exp.get("t", 1e-2)), int(exp.get("n", 10))
    r, s, mode = int(exp.get("r", 1)), int(exp.get("s", 0)), exp.get("mode", "asymmetric")
    rng = stream(exp["seed"], "represent")
    if mode == "modulus":
        vals, L = sample_trimmed_mod_rep(measure, t, r, rng, n)
        rows = [{"index": i, "value": float(v), "rth_modulus": float(b)}
                for i, (v, b) in enumerate(zip(vals, L))]
    else:
        vals, rth, sth = sample_trimmed_asym_rep(measure, t, r, s, rng, n)
        rows = [{"index": i, "value": float(v), "rth_positive": float(p), "sth_negative": float(q)}
                for i, (v, p, q) in enumerate(zip(vals, rth, sth))]
    return _table(rows, fmt), True


def cmd_smooth(measure, exp, fmt):
    grid = [float(x) for x in exp.get("x_grid", [0.25, 0.5, 1.0, 1.25, 1.5, 2.0])]
    sm = smooth_measure(measure)
    rows = [{"x": x, "plus": float(measure.plus(x)), "smoothed_plus": float(sm.plus(x)),
             "minus": float(measure.minus(x)), "smoothed_minus": float(sm.minus(x))}
            for x in grid]
    rep = is_diffuse(sm)
    if fmt == "json":
        doc = {"rows": rows, "smoothed_gamma": sm.gamma, "diffuse": rep.diffuse,
               "base_atoms_plus": measure.plus.atoms(), "base_atoms_minus": measure.minus.atoms()}
        return json.dumps(doc, indent=2) + "\n", rep.diffuse
    return _table(rows, fmt), rep.diffuse


def _experiment_config(measure, exp) -> dg.ExperimentConfig:
    keys = {"mode", "r", "s", "n", "seed", "sampler", "reference", "alpha", "p_plus",
            "reference_n", "smooth", "tolerance", "block_size", "expected_jumps"}
    kw = {k: exp[k] for k in keys if k in exp}
    return dg.ExperimentConfig(measure, t_grid=tuple(_t_grid(exp)), **kw)


def cmd_converge(measure, exp, fmt):
    cfg = _experiment_config(measure, exp)
    rep = dg.convergence_experiment(cfg, threads=exp.get("threads"))
    return (rep.to_json() if fmt == "json" else rep.to_csv()), rep.passed


def cmd_diagnose(measure, exp, fmt):
    z = np.asarray(exp.get("z_grid", np.logspace(-2, -8, 13)), dtype=float)
    rv = dg.rv_index_estimate(measure, z, 2.0)
    sr = dg.sign_ratio_estimate(measure, z)
    rows = []
    for t in _t_grid(exp):
        a, b = norming(measure, t)
        rows.append({"t": t, "a_t": a, "b_t": b})
    r = int(exp.get("r", 0))
    cells = dg.order_stat_bound_check(measure, _t_grid(exp), [2.0, 5.0, 10.0], r,
                                      n=int(exp.get("n", 100_000)),
                                      rng=stream(exp["seed"], "diagnose")) \
        if measure.plus.infinite_activity else []
    ok = all(c.ok for c in cells) and rv.ok
    doc = {"alpha_est": rv.alpha, "alpha_per_point": rv.per_point, "rv_message": rv.message,
           "sign_ratios": sr.ratios, "sign_ratio_converged": sr.converged, "norming": rows,
           "order_stat_cells": [vars(c) for c in cells], "pass": ok}
    if fmt == "json":
        return json.dumps(dg._finite(doc), indent=2, default=dg._jsonable) + "\n", ok
    out = [{"kind": "norming", **row} for row in rows]
    text = _table(out, "csv")
    text += _table([{"alpha_est": rv.alpha, "sign_ratio_last": float(sr.ratios[-1]),
                     "sign_ratio_converged": sr.converged, "pass": ok}], "csv")
    return text, ok


COMMANDS = {"simulate": cmd_simulate, "represent": cmd_represent, "trim": cmd_trim,
            "smooth": cmd_smooth, "converge": cmd_converge, "diagnose": cmd_diagnose}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levytrim", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--t", type=float, help="time horizon (first grid point for converge)")
    p.add_argument("--t-min", dest="t_min", type=float, help="smallest t; grid steps by decades")
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, help="falls back to $LEVYTRIM_SEED, then 0")
    p.add_argument("--threads", type=int, help="worker threads (default: logical cores)")
    p.add_argument("--mode", choices=dg.MODES)
    p.add_argument("--output", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        measure_doc, exp = merged_settings(args)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        exp.setdefault("threads", os.cpu_count() or 1)
        measure = measure_from_dict(measure_doc)
        text, ok = COMMANDS[args.command](measure, exp, args.format)
    except (ConfigError, DomainError, TypeError, KeyError) as exc:
        print(f"levytrim: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"levytrim: numerical failure: {exc}", file=sys.stderr)
        return 1
    write_atomic(args.output, text)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())
