"""Command line front end: ``tandem-aoi <command> [options]``.

Every command writes CSV (or JSON with ``--json``) to standard output or
``--out``.  Exit codes: 0 success, 2 invalid parameters, 3 numerical or
consistency failure, 4 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Sequence

from . import analytic, optim, sim
from .analytic import Scheme, SystemParams
from .coupling import CouplingSpec, resolve_params
from .dist import CompFamily, Kind, ServiceDistribution
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DegenerateConditioningError,
    NumericalError,
    ParameterError,
)

EXIT_OK, EXIT_PARAM, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4

COMMANDS = ("analyze", "simulate", "validate", "optimize", "tradeoff", "sweep")

# values used when neither the command line nor a config file sets an option
DEFAULTS = {
    "dist": "gamma",
    "k": 1.0,
    "p_min": 1.0,
    "p_max": 10.0,
    "packets": 10 ** 6,
    "warmup": 10 ** 3,
    "batches": 30,
    "replications": 1,
    "tol": 0.02,
    "w1": 1.0,
    "w2": 0.0,
    "grid_points": 64,
    "refine_tol": 1e-4,
    "steps": None,
    "json": False,
}


class UsageError(Exception):
    """Bad command line or config file; reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser, command: str) -> None:
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--lambda", dest="lam", type=float, help="job arrival rate")
    p.add_argument("--dist", choices=[k.value for k in Kind])
    p.add_argument("--mean", type=float, help="mean computation time")
    p.add_argument("--k", type=float, help="gamma shape")
    p.add_argument("--mu", type=float, help="transmission rate (instead of --b0/--alpha)")
    p.add_argument("--b0", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p-min", dest="p_min", type=float)
    p.add_argument("--p-max", dest="p_max", type=float)
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--config", help="file of 'key = value' lines")
    p.add_argument("--json", action="store_true", default=None)
    if command in ("simulate", "validate"):
        p.add_argument("--packets", type=int, help="deliveries to simulate")
        p.add_argument("--warmup", type=int, help="warmup deliveries")
        p.add_argument("--seed", type=int, help="defaults to $AOI_SEED, then 0")
        p.add_argument("--batches", type=int)
        p.add_argument("--replications", type=int)
    if command == "validate":
        p.add_argument("--tol", type=float, help="relative error threshold")
    if command in ("optimize", "tradeoff", "sweep"):
        p.add_argument("--w1", type=float, help="weight on average AoI")
        p.add_argument("--w2", type=float, help="weight on average peak AoI")
        p.add_argument("--grid-points", dest="grid_points", type=int)
        p.add_argument("--refine-tol", dest="refine_tol", type=float)
    if command in ("tradeoff", "sweep"):
        p.add_argument("--steps", type=int)
    if command == "sweep":
        p.add_argument("--param", choices=optim.SWEEP_PARAMETERS)
        p.add_argument("--from", dest="start", type=float)
        p.add_argument("--to", dest="stop", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tandem-aoi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        _add_common(sub.add_parser(name), name)
    return parser


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def parse_config(path: str, warn=None) -> dict[str, str]:
    """Read ``key = value`` lines; blank lines and ``#`` comments are skipped.

    A repeated key keeps its last value and triggers a warning.
    """
    warn = warn or (lambda msg: print(msg, file=sys.stderr))
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path!r}: {exc.strerror}") from None
    out: dict[str, str] = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in out:
            warn(f"tandem-aoi: warning: config key {key!r} repeated on line {n}; last value wins")
        out[key] = value
    return out


_CONFIG_ALIASES = {"lambda": "lam", "from": "start", "to": "stop"}


def _overlay(args: argparse.Namespace, parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    actions = {a.dest: a for a in parser._actions if a.dest not in ("help", "config")}
    for key, raw in values.items():
        dest = _CONFIG_ALIASES.get(key, key)
        if dest not in actions:
            raise UsageError(f"--config: unknown key {key!r}")
        act = actions[dest]
        if isinstance(act, argparse._StoreTrueAction):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"--config: {key} expects true or false")
            value = low in ("true", "1", "yes")
        else:
            try:
                value = act.type(raw) if act.type else raw
            except ValueError:
                raise UsageError(f"--config: invalid value for {key}: {raw!r}") from None
            if act.choices is not None and value not in act.choices:
                raise UsageError(f"--config: {key} must be one of {', '.join(act.choices)}")
        if getattr(args, dest) is None:  # command line wins
            setattr(args, dest, value)


def _finish(args: argparse.Namespace) -> None:
    for key, value in DEFAULTS.items():
        if getattr(args, key, "absent") is None:
            setattr(args, key, value)
    if getattr(args, "seed", "absent") is None:
        env = os.environ.get("AOI_SEED")
        try:
            args.seed = int(env) if env is not None else 0
        except ValueError:
            raise UsageError(f"AOI_SEED must be an integer, got {env!r}") from None


# ---------------------------------------------------------------------------
# argument checks that name the offending flag
# ---------------------------------------------------------------------------

def _need(args, dest, flag):
    if getattr(args, dest) is None:
        raise UsageError(f"{flag} is required for {args.command}")
    return getattr(args, dest)


def _positive(value, flag, allow_zero=False):
    ok = value >= 0 if allow_zero else value > 0
    if not (math.isfinite(value) and ok):
        raise UsageError(f"{flag} must be {'>= 0' if allow_zero else '> 0'} and finite, got {value!r}")
    return value


def _family(args) -> CompFamily:
    if args.dist == Kind.GAMMA.value:
        _positive(args.k, "--k")
    return CompFamily(Kind(args.dist), args.k if args.dist == Kind.GAMMA.value else 1.0)


def _coupling(args, required: bool) -> CouplingSpec | None:
    have_mu = args.mu is not None
    have_b = args.b0 is not None or args.alpha is not None
    if have_mu and have_b:
        raise UsageError("--mu conflicts with --b0/--alpha; give exactly one form")
    if have_mu:
        if required:
            raise UsageError(f"{args.command} needs --b0 and --alpha, not --mu")
        _positive(args.mu, "--mu")
        return None
    if not have_b:
        raise UsageError("give either --mu or both --b0 and --alpha")
    _positive(_need(args, "b0", "--b0"), "--b0")
    _positive(_need(args, "alpha", "--alpha"), "--alpha", allow_zero=True)
    _positive(args.p_min, "--p-min")
    if not args.p_max > args.p_min:
        raise UsageError("--p-max must exceed --p-min")
    return CouplingSpec(args.b0, args.alpha, args.p_min, args.p_max)


def _system(args) -> tuple[SystemParams, CouplingSpec | None]:
    lam = _positive(_need(args, "lam", "--lambda"), "--lambda")
    mean = _positive(_need(args, "mean", "--mean"), "--mean")
    fam = _family(args)
    spec = _coupling(args, required=False)
    if spec is None:
        return SystemParams(lam, fam.at(mean), args.mu), None
    if not spec.p_min <= mean <= spec.p_max:
        raise UsageError(f"--mean must lie in [{spec.p_min!r}, {spec.p_max!r}] when coupled, got {mean!r}")
    return resolve_params(spec, lam, fam, mean), spec


def _weights(args) -> optim.ObjectiveWeights:
    _positive(args.w1, "--w1", allow_zero=True)
    _positive(args.w2, "--w2", allow_zero=True)
    if args.w1 + args.w2 <= 0:
        raise UsageError("--w1 and --w2 must not both be zero")
    return optim.ObjectiveWeights(args.w1, args.w2)


def _k_field(comp: ServiceDistribution):
    return comp.shape_k if comp.kind is Kind.GAMMA else (1.0 if comp.kind is Kind.EXPONENTIAL else "")


# ---------------------------------------------------------------------------
# commands; each returns (header, rows, exit code)
# ---------------------------------------------------------------------------

def _cmd_analyze(args):
    params, _ = _system(args)
    scheme = Scheme(_need(args, "scheme", "--scheme"))
    r = analytic.full_report(scheme, params)
    header = ["scheme", "lambda", "mean_comp", "k", "mu", "avg_aoi", "avg_peak_aoi", "p_busy", "eff_rate"]
    row = [scheme.value, params.lam, params.comp.mean, _k_field(params.comp), params.mu,
           r.avg_aoi, r.avg_peak_aoi, r.p_busy, r.eff_rate]
    return header, [row], EXIT_OK


def _sim_config(args, scheme, params) -> sim.SimConfig:
    for flag, dest in (("--packets", "packets"), ("--batches", "batches"), ("--replications", "replications")):
        if getattr(args, dest) < 1:
            raise UsageError(f"{flag} must be >= 1")
    if not 0 <= args.warmup < args.packets:
        raise UsageError("--warmup must satisfy 0 <= warmup < packets")
    if args.batches < 2 or args.packets - args.warmup < args.batches:
        raise UsageError("--batches must be >= 2 and at most packets - warmup")
    if not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    return sim.SimConfig(scheme, params, args.packets, args.warmup, args.seed, args.batches)


def _simulate(args):
    params, _ = _system(args)
    scheme = Scheme(_need(args, "scheme", "--scheme"))
    cfg = _sim_config(args, scheme, params)
    res = sim.replicate(cfg, args.replications)
    return scheme, params, res


def _cmd_simulate(args):
    scheme, params, res = _simulate(args)
    header = ["scheme", "lambda", "mean_comp", "k", "mu", "seed", "deliveries", "avg_aoi",
              "avg_aoi_halfwidth", "avg_peak_aoi", "peak_halfwidth", "busy_found_frac",
              "discarded_stage1", "discarded_stage2", "sim_time"]
    row = [scheme.value, params.lam, params.comp.mean, _k_field(params.comp), params.mu, args.seed,
           res.delivered, res.avg_aoi, res.avg_aoi_halfwidth, res.avg_peak_aoi, res.peak_halfwidth,
           res.busy_found_frac, res.discarded_stage1, res.discarded_stage2, res.sim_time]
    return header, [row], EXIT_OK


def _cmd_validate(args):
    _positive(args.tol, "--tol")
    scheme, params, res = _simulate(args)
    rep = analytic.full_report(scheme, params)
    header = ["scheme", "metric", "analytic", "simulated", "halfwidth", "rel_error", "pass"]
    rows, code = [], EXIT_OK
    for metric, a, s, hw in (
        ("avg_aoi", rep.avg_aoi, res.avg_aoi, res.avg_aoi_halfwidth),
        ("avg_peak_aoi", rep.avg_peak_aoi, res.avg_peak_aoi, res.peak_halfwidth),
    ):
        err = abs(a - s) / a
        ok = err <= args.tol
        if not ok:
            code = EXIT_VALIDATION
        rows.append([scheme.value, metric, a, s, hw, err, "pass" if ok else "fail"])
    return header, rows, code


def _opt_inputs(args):
    scheme = Scheme(_need(args, "scheme", "--scheme"))
    lam = _positive(_need(args, "lam", "--lambda"), "--lambda")
    spec = _coupling(args, required=True)
    for flag, dest in (("--grid-points", "grid_points"),):
        if getattr(args, dest) < 3:
            raise UsageError(f"{flag} must be >= 3")
    _positive(args.refine_tol, "--refine-tol")
    return scheme, lam, _family(args), spec


def _cmd_optimize(args):
    scheme, lam, fam, spec = _opt_inputs(args)
    w = _weights(args)
    r = optim.optimize_mean_comp(scheme, lam, fam, spec, w, args.grid_points, args.refine_tol)
    header = ["scheme", "lambda", "k", "b0", "alpha", "w1", "w2", "best_mean_comp",
              "best_objective", "avg_aoi", "avg_peak_aoi", "evaluations"]
    row = [scheme.value, lam, _k_field(fam.at(1.0)), spec.b0, spec.alpha, w.w1, w.w2,
           r.best_mean_comp, r.best_objective, r.avg_aoi_at_opt, r.avg_peak_at_opt, r.evaluations]
    return header, [row], EXIT_OK


def _cmd_tradeoff(args):
    scheme, lam, fam, spec = _opt_inputs(args)
    steps = 25 if args.steps is None else args.steps
    if steps < 2:
        raise UsageError("--steps must be >= 2")
    pts = optim.tradeoff_curve(scheme, lam, fam, spec, steps, args.grid_points, args.refine_tol)
    header = ["w1", "w2", "mean_comp", "avg_aoi", "avg_peak_aoi"]
    return header, [[p.w1, p.w2, p.mean_comp, p.avg_aoi, p.avg_peak_aoi] for p in pts], EXIT_OK


def _cmd_sweep(args):
    scheme, lam, fam, spec = _opt_inputs(args)
    param = _need(args, "param", "--param")
    lo, hi = _need(args, "start", "--from"), _need(args, "stop", "--to")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise UsageError("--from must not exceed --to")
    steps = 10 if args.steps is None else args.steps
    if steps < 1:
        raise UsageError("--steps must be >= 1")
    if param == "mean_comp" and not (spec.p_min <= lo and hi <= spec.p_max):
        raise UsageError("--from/--to must lie within [--p-min, --p-max] for a mean_comp sweep")
    if param in ("k", "lambda") and lo <= 0:
        raise UsageError(f"--from must be > 0 for a {param} sweep")
    if param == "alpha" and lo < 0:
        raise UsageError("--from must be >= 0 for an alpha sweep")
    if param == "k" and fam.kind is not Kind.GAMMA:
        raise UsageError("a k sweep needs --dist gamma")
    mean = args.mean
    if mean is not None and not spec.p_min <= mean <= spec.p_max:
        raise UsageError("--mean must lie within [--p-min, --p-max]")
    rows = optim.sweep(scheme, lam, fam, spec, param, (lo, hi), steps, _weights(args), mean,
                       args.grid_points, args.refine_tol)
    header = ["parameter", "value", "mean_comp", "avg_aoi", "avg_peak_aoi", "objective"]
    return header, [[param, r.value, r.mean_comp, r.avg_aoi, r.avg_peak_aoi, r.objective] for r in rows], EXIT_OK


_HANDLERS = {
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "validate": _cmd_validate,
    "optimize": _cmd_optimize,
    "tradeoff": _cmd_tradeoff,
    "sweep": _cmd_sweep,
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _check_finite(rows) -> None:
    for row in rows:
        for v in row:
            if isinstance(v, float) and not math.isfinite(v):
                raise NumericalError(f"non-finite value {v!r} in output")


def render(header: Sequence[str], rows, as_json: bool) -> str:
    _check_finite(rows)
    if as_json:
        objs = [dict(zip(header, row)) for row in rows]
        return json.dumps(objs, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        if args.config:
            _overlay(args, sub, parse_config(args.config, warn=lambda m: print(m, file=stderr)))
        _finish(args)
        header, rows, code = _HANDLERS[args.command](args)
        text = render(header, rows, args.json)
    except UsageError as exc:
        print(f"tandem-aoi: error: {exc}", file=stderr)
        return EXIT_PARAM
    except (ParameterError, ConfigurationError) as exc:
        print(f"tandem-aoi: error: {exc}", file=stderr)
        return EXIT_PARAM
    except (NumericalError, ConsistencyError, DegenerateConditioningError) as exc:
        print(f"tandem-aoi: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"tandem-aoi: error: --out: {exc.strerror}", file=stderr)
            return EXIT_PARAM
    else:
        stdout.write(text)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
