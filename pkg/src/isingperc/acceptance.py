"""Statistical acceptance battery: Bernoulli calibration runs plus Ising structural checks.

Each criterion is a function ``Context -> CheckOutcome``.  The context
carries the sample budget and memoizes shared inputs (the estimated p_c,
critical one-arm radii, the four-arm scan, the critical cluster sample) so
criteria can run in any order or alone.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .estimators import (ClusterSample, FourArmScan, L0_of_delta, SamplingPlan, correlation_length,
                         estimate_critical_point, estimate_prob, estimate_probs, fit_exponent,
                         crossing_event, halfplane_curve, origin_clusters, origin_radii, Estimate)
from .events import has_crossing, parse_event
from .gibbs import FREE, PERIODIC, T_C, BoundaryCondition, ModelParams, sample
from .lattice import Rect, annulus_sites
from .oracle import enumerate_measure, russo_check
from .verify import CheckOutcome, duality_exhaustive, duality_sampled


@dataclass(frozen=True)
class Budget:
    seed: int = 20240611
    duality_samples: int = 100_000
    ising_duality_samples: int = 400
    oracle_samples: int = 100_000
    crit_samples: int = 2_000
    crit_tol: float = 0.005
    e2_samples: int = 100_000
    e3_samples: int = 1_000_000
    radii_samples: int = 40_000
    four_arm_samples: int = 200_000
    corrlen_samples: int = 1_000
    corrlen_cap: int = 8_000
    cluster_samples: int = 50_000
    decay_samples: int = 4_000_000


@dataclass
class Context:
    budget: Budget = field(default_factory=Budget)
    _cache: dict = field(default_factory=dict)

    def plan(self, n: int, **kw) -> SamplingPlan:
        return SamplingPlan(n_samples=n, seed=self.budget.seed, **kw)

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def critical_point(self):
        b = self.budget
        return self._memo("pc", lambda: estimate_critical_point(
            ModelParams.bernoulli(0.5), b.crit_tol, self.plan(b.crit_samples)))

    @property
    def p_c(self) -> float:
        return self.critical_point().value

    def critical_radii(self) -> np.ndarray:
        return self._memo("radii", lambda: origin_radii(self.p_c, 256, self.plan(self.budget.radii_samples)))

    def four_arm_scan(self) -> FourArmScan:
        return self._memo("scan", lambda: FourArmScan(self.p_c, self.plan(self.budget.four_arm_samples)))

    def critical_clusters(self) -> ClusterSample:
        targets = [(d, 0) for d in (8, 16, 32)] + [(d, d) for d in (8, 16, 32)]
        return self._memo("clusters", lambda: origin_clusters(
            ModelParams.bernoulli(self.p_c), 128, self.plan(self.budget.cluster_samples), targets))

    def corr_length(self, p: float, side: str):
        b = self.budget
        plan = self.plan(b.corrlen_samples, max_samples=b.corrlen_cap)
        return self._memo(("L", round(p, 10)), lambda: correlation_length(
            ModelParams.bernoulli(p), 0.05, 1024, plan, side=side))


def _pi(radii: np.ndarray, n: int, seed: int) -> Estimate:
    return Estimate.from_hits(int((radii >= n).sum()), radii.size, seed)


def _fmt(x: float) -> str:
    return f"{x:.4g}"


# ------------------------------------------------------------- exact-ish ---

def duality(ctx: Context) -> CheckOutcome:
    parts = [duality_exhaustive(4, 3), duality_exhaustive(4, 4), duality_sampled(ctx.budget.duality_samples)]
    ok = all(p.passed for p in parts)
    return CheckOutcome("duality", ok, "; ".join(f"{p.name}: {p.detail}" for p in parts))


def ising_duality(ctx: Context) -> CheckOutcome:
    """XOR duality on sub-rectangles of Ising configurations (33x33 torus, T = 1.5 T_c)."""
    params = ModelParams.ising(1.5 * T_C, 0.3)
    rects = [Rect(-16, 16, -16, 16), Rect(-10, 5, -3, 12), Rect(0, 0, -8, 8), Rect(-12, 12, 2, 3),
             Rect(-4, 4, -4, 4), Rect(3, 16, -16, -1)]
    stream = sample(params, 16, BoundaryCondition(PERIODIC), rng=np.random.default_rng(ctx.budget.seed))
    checked = 0
    for _ in range(ctx.budget.ising_duality_samples):
        cfg = next(stream)
        for r in rects:
            checked += 1
            if has_crossing(cfg, r, "h", 1) == has_crossing(cfg, r, "v", -1):
                return CheckOutcome("ising duality", False, f"violation on {r} after {checked} checks")
    return CheckOutcome("ising duality", True, f"{checked} rect checks, 0 violations")


_PROBES = ("crossing h plus rect=-1..1x-1..1", "onearm plus n=1", "halfplane E2 n=1", "fourarm v=0,0 n=1")
_CIRCUIT = "circuit plus r=1 R=2"


def _compare(name, pairs):
    lines, ok = [], True
    for text, est, exact in pairs:
        good = abs(est.mean - exact) <= 4 * est.stderr and est.stderr <= 0.005
        ok &= good
        lines.append(f"{text}: mc {_fmt(est.mean)} +- {_fmt(est.stderr)} vs exact {_fmt(exact)}")
    return CheckOutcome(name, ok, "; ".join(lines))


def oracle_equivalence(ctx: Context) -> CheckOutcome:
    model = ModelParams.bernoulli(0.6)
    plan = ctx.plan(ctx.budget.oracle_samples)
    events = [parse_event(t) for t in _PROBES]
    ests = estimate_probs(events, model, 1, plan)
    meas = enumerate_measure(1, model)
    pairs = [(t, e, meas.prob(ev)) for t, ev, e in zip(_PROBES, events, ests)]
    circ = parse_event(_CIRCUIT)
    ann = annulus_sites(1, 2)
    pairs.append((_CIRCUIT, estimate_prob(circ, model, ann, plan), enumerate_measure(ann, model).prob(circ)))
    return _compare("oracle equivalence", pairs)


def ising_oracle_equivalence(ctx: Context) -> CheckOutcome:
    """Heat-bath estimates on a 3x3 torus and a free 24-site annulus against exact enumeration."""
    model = ModelParams.ising(3.0, 0.2)
    plan = ctx.plan(ctx.budget.oracle_samples, thinning=3, chains=4)
    torus = BoundaryCondition(PERIODIC)
    events = [parse_event(t) for t in _PROBES]
    ests = estimate_probs(events, model, 1, plan, torus)
    meas = enumerate_measure(1, model, torus)
    pairs = [(t, e, meas.prob(ev)) for t, ev, e in zip(_PROBES, events, ests)]
    circ = parse_event(_CIRCUIT)
    ann = annulus_sites(1, 2)
    free = BoundaryCondition(FREE)
    pairs.append((_CIRCUIT, estimate_prob(circ, model, ann, plan, free),
                  enumerate_measure(ann, model, free).prob(circ)))
    return _compare("ising oracle equivalence", pairs)


def russo(ctx: Context) -> CheckOutcome:
    tori = [1, Rect(-1, 2, -1, 2), 2]
    events = ["spin 0,0 +", "crossing h plus rect=-1..1x-1..1"]
    pairs = [(0.3, 0.1), (-0.2, 0.1)]
    worst, n = 0.0, 0
    for torus in tori:
        for text in events:
            for h, hc in pairs:
                r = russo_check(torus, parse_event(text), h, hc, T=3.0)
                worst = max(worst, r.rel_gap)
                n += 1
                if not r.rel_gap <= 1e-6:
                    return CheckOutcome("russo", False, f"{torus} {text} h={h}: relative gap {r.rel_gap:.3g}")
    return CheckOutcome("russo", True, f"{n} cases on 9/16/25-site tori, worst relative gap {worst:.2g}")


# ------------------------------------------------------------ statistical ---

def critical_point(ctx: Context) -> CheckOutcome:
    cp = ctx.critical_point()
    per = ", ".join(f"n={n}: {_fmt(v)}" for n, v in cp.per_size)
    ok = abs(cp.value - 0.593) <= 0.005
    return CheckOutcome("critical point", ok, f"p_c = {cp.value:.5f} ({per})")


def ising_critical_field(ctx: Context) -> CheckOutcome:
    """At h = 0 the (+)-crossing of S(n) is below 1/2 by 3 stderr, so h_c(T) > 0."""
    T = 1.5 * T_C
    at_zero = estimate_prob(crossing_event(4), ModelParams.ising(T, 0.0), 4, ctx.plan(2000, chains=4))
    cp = estimate_critical_point(ModelParams.ising(T, 0.0), 0.05, ctx.plan(400, chains=4))
    ok = at_zero.mean + 3 * at_zero.stderr < 0.5 and cp.value > 0
    return CheckOutcome("ising h_c > 0 at 1.5 T_c", ok,
                        f"P(cross S(4) | h=0) = {at_zero.mean:.3f} +- {at_zero.stderr:.3f}; "
                        f"h_c(S(4)) = {cp.value:.3f} +- {cp.tol}")


def _slope_check(name, ns, ests, lo, hi, extra=""):
    fit = fit_exponent(list(zip(ns, ests)))
    ok = lo <= fit.slope <= hi
    hits = ", ".join(f"{n}:{e.hits}" for n, e in zip(ns, ests))
    return CheckOutcome(name, ok, f"slope {fit.slope:.3f} +- {fit.slope_stderr:.3f} in [{lo}, {hi}]; "
                                  f"hits {hits}{extra}"), fit


def halfplane_two_arm(ctx: Context) -> CheckOutcome:
    ns = [16, 32, 64, 128, 256]
    ests = halfplane_curve(ctx.p_c, ns, ctx.plan(ctx.budget.e2_samples), "E2")
    return _slope_check("half-plane two-arm", ns, ests, -1.25, -0.80)[0]


def halfplane_three_arm(ctx: Context) -> CheckOutcome:
    ns = [8, 16, 32, 64]
    ests = halfplane_curve(ctx.p_c, ns, ctx.plan(ctx.budget.e3_samples), "E3")
    low = [n for n, e in zip(ns, ests) if e.hits < 50]
    note = f"; fewer than 50 hits at n={low}, importance sampling advised" if low else ""
    return _slope_check("half-plane three-arm", ns, ests, -2.4, -1.6, note)[0]


def one_arm(ctx: Context) -> CheckOutcome:
    ns = [8, 16, 32, 64, 128, 256]
    radii = ctx.critical_radii()
    ests = [_pi(radii, n, ctx.budget.seed) for n in ns]
    out, _ = _slope_check("one-arm", ns, ests, -0.16, -0.06)
    drops = []
    for (n, a), (m, b) in zip(zip(ns, ests), zip(ns[1:], ests[1:])):
        pooled = np.hypot(n * a.stderr, m * b.stderr)
        if m * b.mean < n * a.mean - 3 * pooled:
            drops.append(n)
    ok = out.passed and not drops
    return CheckOutcome("one-arm", ok, out.detail + f"; n*pi(n) drops at {drops or 'none'}")


def four_arm(ctx: Context) -> CheckOutcome:
    ns = [8, 16, 32, 64, 128]
    scan = ctx.four_arm_scan()
    return _slope_check("four-arm", ns, [scan.estimate(n) for n in ns], -1.50, -1.00)[0]


def kesten_length(ctx: Context) -> CheckOutcome:
    scan = ctx.four_arm_scan()
    ratios, lines, ok = [], [], True
    for delta in (0.02, 0.04, 0.08):
        L = ctx.corr_length(ctx.p_c - delta, "sub")
        L0 = L0_of_delta(delta, scan=scan)
        ok &= L.status == "resolved" and L0.status == "resolved"
        ratios.append(L.L / L0.n)
        lines.append(f"delta={delta}: L={L.L} ({L.status}), L0={L0.n} ({L0.status})")
    spread = max(ratios) / min(ratios)
    ok &= spread <= 16.0
    return CheckOutcome("kesten length", ok, "; ".join(lines) + f"; ratio spread {spread:.2f} <= 16")


def near_critical_ratio(ctx: Context) -> CheckOutcome:
    crit = ctx.critical_radii()
    seed = ctx.budget.seed
    lines, ok = [], True
    for sign, side in ((-1, "sub"), (1, "super")):
        p = ctx.p_c + sign * 0.03
        L = ctx.corr_length(p, side)
        ns = [1 << k for k in range(20) if (1 << k) <= L.L]
        radii = origin_radii(p, ns[-1], ctx.plan(ctx.budget.radii_samples))
        rs = [_pi(radii, n, seed).mean / _pi(crit, n, seed).mean for n in ns]
        ok &= L.status == "resolved" and all(0.4 <= r <= 2.5 for r in rs)
        lines.append(f"p_c{'+' if sign > 0 else '-'}0.03 L={L.L}: ratios "
                     + ", ".join(f"{n}:{r:.3f}" for n, r in zip(ns, rs)))
    return CheckOutcome("near-critical one-arm ratio", ok, "; ".join(lines))


def two_point(ctx: Context) -> CheckOutcome:
    cs = ctx.critical_clusters()
    lines, ok = [], True
    for t in cs.targets:
        d = max(abs(t[0]), abs(t[1]))
        r = cs.tau(t).mean / cs.pi(d).mean ** 2
        ok &= 0.2 <= r <= 5.0
        lines.append(f"x={t}: {r:.3f}")
    return CheckOutcome("two-point vs one-arm squared", ok, ", ".join(lines))


def volume_radius(ctx: Context) -> CheckOutcome:
    cs = ctx.critical_clusters()
    ns = [8, 16, 32, 64]
    vals = [cs.size_given_radius(n).mean / (n * n * cs.pi(n).mean) for n in ns]
    spread = max(vals) / min(vals)
    return CheckOutcome("volume-radius band", spread <= 10.0,
                        ", ".join(f"{n}:{v:.3f}" for n, v in zip(ns, vals)) + f"; C/c = {spread:.2f} <= 10")


def offcritical_decay(ctx: Context) -> CheckOutcome:
    L = ctx.corr_length(0.45, "sub")
    seed = ctx.budget.seed
    radii = origin_radii(0.45, 5 * L.L, ctx.plan(ctx.budget.decay_samples))
    pis = [_pi(radii, k * L.L, seed) for k in range(1, 6)]
    ratios = [b.mean / a.mean if a.hits else float("nan") for a, b in zip(pis, pis[1:])]
    ok = L.status == "resolved" and all(r <= 0.7 for r in ratios)
    hits = ", ".join(str(p.hits) for p in pis)
    return CheckOutcome("off-critical decay", ok,
                        f"L={L.L}; ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f"; hits {hits}")


_REPRO_CONFIGS = {
    "bernoulli": """
[experiment]
kind = estimate
[model]
kind = bernoulli
p = 0.59
[geometry]
sizes = 4, 8, 16
[plan]
n_samples = 3000
seed = 99
workers = {workers}
[estimate]
event = crossing h plus rect=-{{n}}..{{n}}x-{{n}}..{{n}}
""",
    "ising": """
[experiment]
kind = estimate
[model]
kind = ising
T = 3.4
h = 0.1
[geometry]
sizes = 3, 5
[plan]
n_samples = 400
seed = 99
workers = {workers}
chains = 4
[estimate]
event = onearm plus n={{n}}
""",
}


def reproducibility(ctx: Context) -> CheckOutcome:
    from .cli import run_experiment

    lines, ok = [], True
    with tempfile.TemporaryDirectory() as tmp:
        for name, text in _REPRO_CONFIGS.items():
            digests = []
            for k, workers in enumerate((1, 1, 2)):
                out = os.path.join(tmp, f"{name}{k}")
                path = os.path.join(tmp, f"{name}{k}.ini")
                with open(path, "w") as f:
                    f.write(text.format(workers=workers) + f"[output]\ndir = {out}\n")
                status = run_experiment(path)
                with open(os.path.join(out, "results.csv"), "rb") as f:
                    digests.append(hashlib.sha256(f.read()).hexdigest())
                ok &= status == 0
            same = len(set(digests)) == 1
            ok &= same
            lines.append(f"{name}: {'identical' if same else 'DIFFERENT'} ({digests[0][:12]})")
    return CheckOutcome("reproducibility", ok, "; ".join(lines) + " across reruns and workers 1/2")


CRITERIA: list[tuple[str, Callable[[Context], CheckOutcome]]] = [
    ("duality", duality),
    ("oracle_equivalence", oracle_equivalence),
    ("russo", russo),
    ("critical_point", critical_point),
    ("halfplane_two_arm", halfplane_two_arm),
    ("halfplane_three_arm", halfplane_three_arm),
    ("one_arm", one_arm),
    ("four_arm", four_arm),
    ("kesten_length", kesten_length),
    ("near_critical_ratio", near_critical_ratio),
    ("two_point", two_point),
    ("volume_radius", volume_radius),
    ("offcritical_decay", offcritical_decay),
    ("reproducibility", reproducibility),
    ("ising_critical_field", ising_critical_field),
    ("ising_duality", ising_duality),
    ("ising_oracle_equivalence", ising_oracle_equivalence),
]


def run_criterion(fn, ctx: Context) -> CheckOutcome:
    t = time.perf_counter()
    out = fn(ctx)
    return CheckOutcome(out.name, out.passed, out.detail, time.perf_counter() - t)


def run_acceptance(ctx: Context | None = None, report: Callable[[str], None] | None = print) -> list[CheckOutcome]:
    ctx = ctx or Context()
    outcomes = []
    for _, fn in CRITERIA:
        out = run_criterion(fn, ctx)
        outcomes.append(out)
        if report:
            report(out.line())
    return outcomes
