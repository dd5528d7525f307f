"""Exact and fast self-checks: the quick battery behind ``isingperc verify``."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from .estimators import SamplingPlan, estimate_prob
from .events import Crossing, FourArm, OneArm, SpinAt, four_arm_at, is_pivotal, parse_event
from .gibbs import (PLUS, BoundaryCondition, ModelParams, SpinConfig, bernoulli_config,
                    heat_bath_conditional, local_field)
from .lattice import Rect
from .oracle import enumerate_measure, exhaustive_event_check, russo_check


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _config_text(cfg: SpinConfig) -> str:
    rows = ["".join("+" if s == 1 else "-" for s in row) for row in np.asarray(cfg.spins)[::-1]]
    return "/".join(rows)


def duality_exhaustive(nx: int, ny: int, crossing: Callable | None = None) -> CheckOutcome:
    """Horizontal (+)-crossing XOR vertical (-*)-crossing on every config of an nx-by-ny rect.

    ``crossing(config, rect, orientation, color)`` defaults to ``has_crossing``;
    passing another detector lets the check be pointed at a broken one.
    """
    rect = Rect(0, nx - 1, 0, ny - 1)
    if crossing is None:
        res = exhaustive_event_check(rect, (Crossing(rect, "h", 1), "xor", Crossing(rect, "v", -1)))
    else:
        res = exhaustive_event_check(
            rect, lambda c: crossing(c, rect, "h", 1) != crossing(c, rect, "v", -1))
    detail = f"{res.checked} configs"
    if not res.passed:
        detail += f", counterexample {_config_text(res.counterexample)}"
    return CheckOutcome(f"duality {nx}x{ny}", res.passed, detail)


def duality_sampled(n_samples: int, nmax: int = 129, seed: int = 7) -> CheckOutcome:
    bad, first = K.duality_scan(np.uint64(seed), 0, n_samples, nmax, 0.3, 0.8)
    detail = f"{n_samples} rects up to {nmax}x{nmax}, {bad} violations"
    if bad:
        detail += f", first at sample {first}"
    return CheckOutcome("duality sampled", bad == 0, detail)


def pivotal_involution() -> CheckOutcome:
    """Pivotality of v does not depend on the spin at v."""
    ev = parse_event("crossing h plus rect=-1..1x-1..1")
    sites = [(x, y) for y in (-1, 0, 1) for x in (-1, 0, 1)]
    res = exhaustive_event_check(
        1, lambda c: all(is_pivotal(c, v, ev) == is_pivotal(c.flipped(v), v, ev) for v in sites))
    return CheckOutcome("pivotal involution S(1)", res.passed, f"{res.checked} configs x 9 sites")


def four_arm_routes(n_random: int = 300, seed: int = 11) -> CheckOutcome:
    """Direct pivotality and the arm decomposition agree on Omega(O, S(n))."""
    res = exhaustive_event_check(
        1, lambda c: four_arm_at(c, (0, 0), 1, "direct") == four_arm_at(c, (0, 0), 1, "arms"))
    if not res.passed:
        return CheckOutcome("four-arm routes", False,
                            f"S(1) counterexample {_config_text(res.counterexample)}")
    for idx in range(n_random):
        n = 2 + idx % 5
        cfg = bernoulli_config(n, 0.5927, seed, idx)
        if four_arm_at(cfg, (0, 0), n, "direct") != four_arm_at(cfg, (0, 0), n, "arms"):
            return CheckOutcome("four-arm routes", False, f"disagree at n={n}, sample {idx}")
    return CheckOutcome("four-arm routes", True, f"S(1) exhaustive + {n_random} random n in 2..6")


def circuit_arm_duality() -> CheckOutcome:
    """(+)-circuit in S(2) minus O XOR a (-*)-arm from ring 1 to ring 2 (2^24 configs)."""
    from .lattice import annulus_sites
    res = exhaustive_event_check(annulus_sites(1, 2), (parse_event("circuit plus r=1 R=2"), "xor",
                                                       parse_event("arms k1=0 k2=1 r=1 R=2")))
    return CheckOutcome("circuit/arm duality annulus(1,2)", res.passed, f"{res.checked} configs")


def russo_battery(cases=None, tol: float = 1e-6) -> CheckOutcome:
    cases = cases or [
        (1, "spin 0,0 +", 0.3, 0.1),
        (Rect(0, 3, 0, 3), "crossing h plus rect=0..3x0..3", -0.2, 0.1),
    ]
    worst = 0.0
    for torus, text, h, hc in cases:
        r = russo_check(torus, parse_event(text), h, hc, T=3.0)
        worst = max(worst, r.rel_gap)
        if not r.rel_gap <= tol:
            return CheckOutcome("russo", False, f"{text} h={h} h_c={hc}: gap {r.gap:.3g}")
    return CheckOutcome("russo", True, f"{len(cases)} cases, worst relative gap {worst:.2g}")


def dlr_consistency(T: float = 2.5, h: float = 0.3, tol: float = 1e-12) -> CheckOutcome:
    """Exact single-site conditionals match the heat-bath rule at the centre of a plus-bounded S(1)."""
    params = ModelParams.ising(T, h)
    bc = BoundaryCondition(PLUS)
    meas = enumerate_measure(1, params, bc)
    worst = 0.0
    for c in range(512):
        cfg = meas.space.config(c)
        exact = meas.site_conditional(cfg, (0, 0))
        hb = heat_bath_conditional(local_field(cfg, (0, 0), h), params.beta)
        worst = max(worst, abs(exact - hb))
    return CheckOutcome("DLR consistency", worst <= tol, f"max deviation {worst:.2g}")


def normalization(tol: float = 1e-12) -> CheckOutcome:
    meas = enumerate_measure(Rect(0, 3, 0, 2), ModelParams.ising(2.0, 0.1))
    err = abs(meas.total_mass() - 1.0)
    uni = enumerate_measure(1, ModelParams.ising(1e8, 0.0))
    u_err = abs(uni.prob(parse_event("onearm plus n=1")) - 240 / 512)
    ok = err <= tol and u_err <= 1e-6
    return CheckOutcome("normalization", ok, f"|mass - 1| = {err:.2g}, beta->0 gap {u_err:.2g}")


def oracle_agreement(n_samples: int = 20_000, seed: int = 5) -> CheckOutcome:
    model = ModelParams.bernoulli(0.5)
    meas = enumerate_measure(1, model)
    for ev in (OneArm(1), SpinAt((0, 0), 1), FourArm((0, 0), 1)):
        exact = meas.prob(ev)
        est = estimate_prob(ev, model, 1, SamplingPlan(n_samples=n_samples, seed=seed))
        if abs(est.mean - exact) > 4 * est.stderr + 1e-15:
            return CheckOutcome("oracle agreement", False,
                                f"{ev.to_text()}: {est.mean} vs exact {exact} (se {est.stderr:.3g})")
    return CheckOutcome("oracle agreement", True, f"3 events, {n_samples} samples each")


QUICK: list[tuple[str, Callable[[], CheckOutcome]]] = [
    ("duality 4x3", lambda: duality_exhaustive(4, 3)),
    ("duality 4x4", lambda: duality_exhaustive(4, 4)),
    ("duality sampled", lambda: duality_sampled(10_000)),
    ("pivotal involution", pivotal_involution),
    ("four-arm routes", four_arm_routes),
    ("russo", russo_battery),
    ("DLR consistency", dlr_consistency),
    ("normalization", normalization),
    ("oracle agreement", oracle_agreement),
]


def _timed(fn) -> CheckOutcome:
    t = time.perf_counter()
    out = fn()
    return CheckOutcome(out.name, out.passed, out.detail, time.perf_counter() - t)


def verify_suite(level: str = "quick", report: Callable[[str], None] | None = print) -> list[CheckOutcome]:
    """Run the quick battery; ``full`` appends the statistical acceptance battery."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    outcomes = []
    for _, fn in QUICK:
        out = _timed(fn)
        outcomes.append(out)
        if report:
            report(out.line())
    if level == "full":
        from .acceptance import run_acceptance
        outcomes.extend(run_acceptance(report=report))
    return outcomes


def first_failure(outcomes) -> CheckOutcome | None:
    return next((o for o in outcomes if not o.passed), None)
