"""Experiment runner: ``isingperc run <config>``, ``isingperc verify [--full]``,
``isingperc report <summary.json...>``.

Config files are INI text::

    [experiment]
    kind = estimate          # estimate | corrlen | arm-exponent | l0-scan | scaling | verify

    [model]
    kind = bernoulli         # or: kind = ising, T = 3.4, h = 0.1
    p = 0.5927

    [geometry]
    sizes = 8, 16, 32        # box radii n; regions are S(n)
    boundary = periodic      # Ising only: periodic | free | plus | minus

    [plan]
    n_samples = 10000
    seed = 1                 # required, no wall-clock default
    workers = 1              # also: burn_in, thinning, chains, wolff_per_sweep, max_samples

    [output]
    dir = out/run1           # relative to the config file; default <config stem>_out

Kind sections:

    [estimate]  event = <event text, {n} is replaced by each size>
    [corrlen]   eps = 0.05, n_max = 1024, side = auto | sub | super
    [arms]      event = onearm | fourarm | E2 | E2* | E3 | E3*
    [l0]        deltas = 0.02, 0.04, 0.08; n_max = 1024
    [scaling]   four_arm_sizes = 8, 16, 32 (one-arm uses geometry.sizes),
                or delta_r = value, stderr and nu = value, stderr to skip sampling;
                measured_<name> = value, stderr adds a residual row
    [verify]    level = quick | full

Outputs (directory rewritten on every run):

results.csv
    header ``quantity,n,mean,stderr,n_samples,seed``; floats in shortest
    round-trip form.
summary.json
    ``{"kind", "config_sha256", "code_version", "model", "plan", "status",
    "notes", "fits": {name: {"slope", "slope_stderr", "intercept",
    "n_points"}}, "scaling": {"inputs", "derived", "residuals"} | null,
    ...kind-specific keys}``.  Pairs are ``[value, stderr]``.

Exit status: 0 on success (unresolved or capacity outcomes are recorded in
``status``), 1 when a verification fails, 2 on a config error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

from . import __version__
from .errors import CapacityError
from .estimators import (Estimate, FourArmScan, L0_of_delta, SamplingPlan, correlation_length,
                         estimate_probs, exponents_from_fits, fit_exponent, four_arm_curve,
                         halfplane_curve, one_arm_curve, scaling_report)
from .events import HALF_KINDS, parse_event
from .gibbs import BoundaryCondition, ModelParams

log = logging.getLogger("isingperc")

KINDS = ("estimate", "corrlen", "arm-exponent", "l0-scan", "scaling", "verify")
COLUMNS = ("quantity", "n", "mean", "stderr", "n_samples", "seed")


class ConfigError(Exception):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(message)
        self.line = line
        self.column = column

    def __str__(self):
        return f"line {self.line}, column {self.column}: {self.args[0]}"


# ------------------------------------------------------------------ config ---

class _Config:
    """configparser plus line/column lookup for error messages."""

    def __init__(self, text: str, path: str = "<config>"):
        self.path = path
        self.lines = text.splitlines()
        self._prescan()
        self.cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        try:
            self.cp.read_string(text, source=path)
        except configparser.MissingSectionHeaderError as e:
            raise ConfigError("missing [section] header", e.lineno, 1) from None
        except configparser.ParsingError as e:
            lineno, _ = e.errors[0]
            raise ConfigError("cannot parse line", lineno, 1) from None
        except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
            raise ConfigError(e.message.split(": ", 1)[-1], e.lineno or 1, 1) from None

    def _prescan(self):
        """Reject malformed lines up front; configparser reports them late or not at all."""
        for i, raw in enumerate(self.lines, start=1):
            s = raw.split("#", 1)[0].split(";", 1)[0].strip()
            if not s or raw[:1].isspace():
                continue
            if s.startswith("["):
                if not s.endswith("]") or not s[1:-1].strip():
                    raise ConfigError("bad section header", i, 1)
            elif "=" not in s and ":" not in s:
                raise ConfigError("expected 'key = value'", i, 1)

    def _where(self, section: str, key: str | None = None) -> tuple[int, int]:
        current = None
        header = 1
        for i, raw in enumerate(self.lines, start=1):
            s = raw.strip()
            if s.startswith("[") and s.endswith("]"):
                current = s[1:-1].strip()
                if current == section:
                    header = i
                continue
            if current == section and key is not None:
                name, sep, rest = raw.partition("=")
                if sep and name.strip().lower() == key.lower():
                    return i, len(name) + 2 + len(rest) - len(rest.lstrip())
        return header, 1

    def has(self, section: str, key: str) -> bool:
        return self.cp.has_option(section, key)

    def raw(self, section: str, key: str, default=None, required: bool = True) -> str | None:
        if not self.cp.has_section(section):
            if default is not None or not required:
                return default
            raise ConfigError(f"missing section [{section}]", len(self.lines) or 1, 1)
        if not self.cp.has_option(section, key):
            if default is not None or not required:
                return default
            raise ConfigError(f"missing key '{key}' in [{section}]", *self._where(section))
        return self.cp.get(section, key)

    def typed(self, section: str, key: str, conv, default=None, required: bool = True):
        value = self.raw(section, key, default, required)
        if value is None or not isinstance(value, str):
            return value
        try:
            return conv(value)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"bad value for '{key}': {e}", *self._where(section, key)) from None

    def check_kind(self, kind: str):
        if kind not in KINDS:
            raise ConfigError(f"unknown experiment kind '{kind}'", *self._where("experiment", "kind"))


def _ints(text: str) -> list[int]:
    out = [int(t) for t in text.replace(",", " ").split()]
    if not out:
        raise ValueError("empty list")
    return out


def _floats(text: str) -> list[float]:
    out = [float(t) for t in text.replace(",", " ").split()]
    if not out:
        raise ValueError("empty list")
    return out


def _pair(text: str) -> tuple[float, float]:
    v = _floats(text)
    if len(v) != 2:
        raise ValueError("expected 'value, stderr'")
    return v[0], v[1]


@dataclass
class Experiment:
    kind: str
    model: ModelParams
    sizes: list
    bc: BoundaryCondition
    plan: SamplingPlan
    out_dir: str
    cfg: _Config
    sha256: str


def _model(cfg: _Config) -> ModelParams:
    kind = cfg.raw("model", "kind")
    try:
        if kind == "bernoulli":
            return ModelParams.bernoulli(cfg.typed("model", "p", float))
        if kind == "ising":
            return ModelParams.ising(cfg.typed("model", "T", float), cfg.typed("model", "h", float))
    except ValueError as e:
        raise ConfigError(str(e), *cfg._where("model")) from None
    raise ConfigError(f"unknown model kind '{kind}'", *cfg._where("model", "kind"))


def load_experiment(path: str) -> Experiment:
    with open(path, "rb") as f:
        data = f.read()
    cfg = _Config(data.decode("utf-8"), path)
    kind = cfg.raw("experiment", "kind")
    cfg.check_kind(kind)
    out = cfg.raw("output", "dir", required=False)
    base = os.path.dirname(os.path.abspath(path))
    out_dir = os.path.join(base, out) if out else os.path.splitext(os.path.abspath(path))[0] + "_out"
    if kind == "verify":
        return Experiment(kind, None, [], None, None, out_dir, cfg, hashlib.sha256(data).hexdigest())
    model = _model(cfg)
    sizes = cfg.typed("geometry", "sizes", _ints, required=False) or []
    bc = BoundaryCondition(cfg.raw("geometry", "boundary", "periodic"))
    opt = {}
    for key in ("burn_in", "thinning", "chains", "wolff_per_sweep", "max_samples"):
        if cfg.has("plan", key):
            opt[key] = cfg.typed("plan", key, int)
    try:
        plan = SamplingPlan(n_samples=cfg.typed("plan", "n_samples", int), seed=cfg.typed("plan", "seed", int),
                            workers=cfg.typed("plan", "workers", int, "1"), **opt)
    except ValueError as e:
        raise ConfigError(str(e), *cfg._where("plan")) from None
    return Experiment(kind, model, sizes, bc, plan, out_dir, cfg, hashlib.sha256(data).hexdigest())


# ------------------------------------------------------------------ output ---

def _num(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_results(path: str, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COLUMNS)
        for q, n, est in rows:
            w.writerow([q, n, _num(float(est.mean)), _num(float(est.stderr)), est.n_samples, est.seed])


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _fit_dict(fit) -> dict:
    return {"slope": fit.slope, "slope_stderr": fit.slope_stderr, "intercept": fit.intercept,
            "n_points": fit.n_points}


def _model_dict(m: ModelParams) -> dict:
    return {"kind": "ising", "T": m.T, "h": m.h} if m.is_ising else {"kind": "bernoulli", "p": m.p}


# ----------------------------------------------------------------- kinds ---

def _sizes(ex: Experiment) -> list:
    if not ex.sizes:
        ex.cfg.raw("geometry", "sizes")  # raises with the location
    return ex.sizes


def _run_estimate(ex: Experiment, summary: dict):
    _sizes(ex)
    template = ex.cfg.raw("estimate", "event")
    events = []
    for n in ex.sizes:
        text = template.replace("{n}", str(n))
        try:
            events.append(parse_event(text))
        except Exception as e:
            raise ConfigError(f"bad event '{text}': {e}", *ex.cfg._where("estimate", "event")) from None
    rows = []
    for n, ev in zip(ex.sizes, events):
        est = estimate_probs([ev], ex.model, n, ex.plan, ex.bc)[0]
        rows.append((template, n, est))
        log.info("%s n=%d: %.6g +- %.2g", template, n, est.mean, est.stderr)
    return rows


def _run_corrlen(ex: Experiment, summary: dict):
    eps = ex.cfg.typed("corrlen", "eps", float, "0.05")
    n_max = ex.cfg.typed("corrlen", "n_max", int, "1024")
    side = ex.cfg.raw("corrlen", "side", "auto")
    if side not in ("auto", "sub", "super"):
        raise ConfigError(f"side must be auto, sub or super, not '{side}'", *ex.cfg._where("corrlen", "side"))
    res = correlation_length(ex.model, eps, n_max, ex.plan, None if side == "auto" else side, ex.bc)
    summary["status"] = res.status
    summary["correlation_length"] = {"L": res.L, "status": res.status, "side": res.side, "eps": eps,
                                     "trace": [[t.n, t.decision] for t in res.trace]}
    return [("crossing", t.n, t.estimate) for t in res.trace]


def _arm_curve(ex: Experiment, kind: str, ns):
    if kind == "onearm":
        return one_arm_curve(ex.model, ns, ex.plan, ex.bc)
    if ex.model.is_ising:
        raise ConfigError(f"'{kind}' curves are Bernoulli-only", *ex.cfg._where("arms", "event"))
    if kind == "fourarm":
        return four_arm_curve(ex.model.p, ns, ex.plan)
    return halfplane_curve(ex.model.p, ns, ex.plan, kind)


def _run_arms(ex: Experiment, summary: dict):
    kind = ex.cfg.raw("arms", "event")
    if kind not in ("onearm", "fourarm") + HALF_KINDS:
        raise ConfigError(f"unknown arm event '{kind}'", *ex.cfg._where("arms", "event"))
    ests = _arm_curve(ex, kind, _sizes(ex))
    rows = [(kind, n, e) for n, e in zip(ex.sizes, ests)]
    low = [n for n, e in zip(ex.sizes, ests) if e.hits is not None and e.hits < 50]
    if low:
        summary["notes"].append(f"fewer than 50 hits at n={low}; importance sampling advised")
    pts = [(n, e) for n, e in zip(ex.sizes, ests) if e.mean > 0]
    if len({n for n, _ in pts}) >= 2:
        summary["fits"][kind] = _fit_dict(fit_exponent(pts))
    else:
        summary["status"] = "insufficient-data"
    return rows


def _run_l0(ex: Experiment, summary: dict):
    if ex.model.is_ising:
        raise ConfigError("l0-scan needs a Bernoulli model at p_c", *ex.cfg._where("model", "kind"))
    deltas = ex.cfg.typed("l0", "deltas", _floats)
    n_max = ex.cfg.typed("l0", "n_max", int, "1024")
    scan = FourArmScan(ex.model.p, ex.plan, n_max)
    out = {}
    for d in sorted(deltas, reverse=True):
        r = L0_of_delta(d, scan=scan)
        out[repr(d)] = {"L0": r.n, "status": r.status}
        if r.status != "resolved":
            summary["status"] = "unresolved"
    summary["L0"] = out
    return [("fourarm", n, scan.values[n]) for n in scan.grid if n in scan.values]


def _run_scaling(ex: Experiment, summary: dict):
    rows = []
    measured = {}
    for key in ex.cfg.cp.options("scaling") if ex.cfg.cp.has_section("scaling") else []:
        if key.startswith("measured_"):
            measured[key[len("measured_"):]] = ex.cfg.typed("scaling", key, _pair)
    if ex.cfg.has("scaling", "delta_r"):
        dr = ex.cfg.typed("scaling", "delta_r", _pair)
        nu = ex.cfg.typed("scaling", "nu", _pair)
    else:
        if ex.model.is_ising:
            raise ConfigError("sampled scaling inputs need a Bernoulli model", *ex.cfg._where("model", "kind"))
        _sizes(ex)
        four_ns = ex.cfg.typed("scaling", "four_arm_sizes", _ints, "8, 16, 32, 64")
        one = one_arm_curve(ex.model, ex.sizes, ex.plan)
        four = four_arm_curve(ex.model.p, four_ns, ex.plan)
        rows += [("onearm", n, e) for n, e in zip(ex.sizes, one)]
        rows += [("fourarm", n, e) for n, e in zip(four_ns, four)]
        f1 = fit_exponent(list(zip(ex.sizes, one)))
        f4 = fit_exponent(list(zip(four_ns, four)))
        summary["fits"] = {"onearm": _fit_dict(f1), "fourarm": _fit_dict(f4)}
        dr, nu = exponents_from_fits(f1, f4)
    summary["scaling"] = scaling_report(dr, nu, measured).to_dict()
    return rows


def _run_verify(ex: Experiment, summary: dict):
    from .verify import first_failure, verify_suite

    level = ex.cfg.raw("verify", "level", "quick")
    if level not in ("quick", "full"):
        raise ConfigError("level must be quick or full", *ex.cfg._where("verify", "level"))
    outcomes = verify_suite(level, report=log.info)
    summary["checks"] = [{"name": o.name, "passed": o.passed, "detail": o.detail} for o in outcomes]
    bad = first_failure(outcomes)
    summary["status"] = "ok" if bad is None else f"failed: {bad.name}"
    return [(o.name, 0, Estimate(1.0 if o.passed else 0.0, 0.0, 1, 0)) for o in outcomes]


_RUNNERS = {"estimate": _run_estimate, "corrlen": _run_corrlen, "arm-exponent": _run_arms,
            "l0-scan": _run_l0, "scaling": _run_scaling, "verify": _run_verify}


def run_experiment(path: str) -> int:
    """Run one config; returns the exit status."""
    try:
        ex = load_experiment(path)
    except ConfigError as e:
        print(f"{path}: config error at {e}", file=sys.stderr)
        return 2
    summary = {"kind": ex.kind, "config_sha256": ex.sha256, "code_version": __version__,
               "model": _model_dict(ex.model) if ex.model else None,
               "plan": vars(ex.plan) if ex.plan else None,
               "status": "ok", "notes": [], "fits": {}, "scaling": None}
    try:
        rows = _RUNNERS[ex.kind](ex, summary)
    except ConfigError as e:
        print(f"{path}: config error at {e}", file=sys.stderr)
        return 2
    except CapacityError as e:
        summary["status"] = "capacity"
        summary["notes"].append(str(e))
        rows = []
    os.makedirs(ex.out_dir, exist_ok=True)
    write_results(os.path.join(ex.out_dir, "results.csv"), rows)
    with open(os.path.join(ex.out_dir, "summary.json"), "w") as f:
        json.dump(_jsonable(summary), f, indent=2, sort_keys=True)
        f.write("\n")
    if ex.kind == "verify" and summary["status"] != "ok":
        print(summary["status"], file=sys.stderr)
        return 1
    return 0


# ------------------------------------------------------------------ report ---

_REPORT_KEYS = ("delta_r", "nu", "delta", "eta", "beta", "gamma", "Delta_k")


def report(paths) -> str:
    """One scaling table row per summary that carries a scaling report."""
    head = ["summary"] + list(_REPORT_KEYS)
    lines = [head]
    for p in paths:
        with open(p) as f:
            s = json.load(f)
        sc = s.get("scaling")
        if not sc:
            lines.append([p] + ["-"] * len(_REPORT_KEYS))
            continue
        vals = {**sc["inputs"], **sc["derived"]}
        lines.append([p] + [f"{vals[k][0]:.4g}+-{vals[k][1]:.2g}" for k in _REPORT_KEYS])
    widths = [max(len(r[i]) for r in lines) for i in range(len(head))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="isingperc", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only warnings on stderr")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_ver = sub.add_parser("verify", help="run the verification battery")
    p_ver.add_argument("--full", action="store_true", help="add the statistical acceptance battery")
    p_rep = sub.add_parser("report", help="merge summary.json files into one scaling table")
    p_rep.add_argument("summaries", nargs="+")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")

    if args.cmd == "run":
        return run_experiment(args.config)
    if args.cmd == "verify":
        from .verify import first_failure, verify_suite

        outcomes = verify_suite("full" if args.full else "quick", report=print)
        bad = first_failure(outcomes)
        if bad is not None:
            print(f"first failure: {bad.name}", file=sys.stderr)
            return 1
        return 0
    try:
        print(report(args.summaries))
    except (OSError, ValueError, KeyError) as e:
        print(f"cannot read summaries: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
