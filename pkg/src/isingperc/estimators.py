"""Monte Carlo estimates, threshold searches, exponent fits and scaling arithmetic.

Bernoulli estimates draw sample ``i`` of stream ``seed`` from the
counter-based site hash, so every estimate is a pure function of
(seed, sample range) and the same index gives the same uniforms at every
p (monotone coupling).  Work is split into contiguous index ranges per
worker and hit counts are summed, which keeps results independent of the
worker count.  Ising estimates run ``plan.chains`` independent chains seeded
by ``(seed, chain)``; workers take whole chains.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from multiprocessing import get_context
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .errors import InvalidDataError, InvalidParameterError, NoBracketError
from .events import Crossing, EventSpec, HalfPlane, check_region
from .gibbs import T_C, BoundaryCondition, Chain, ModelParams, SpinConfig, as_region, default_burn_in
from .lattice import Rect, SiteSet

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class SamplingPlan:
    n_samples: int = 10_000
    burn_in: int | None = None     # Ising sweeps before the first sample; None = 50 * side
    thinning: int = 2              # Ising sweeps between samples
    workers: int = 1
    seed: int = 0
    chains: int = 4                # independent Ising chains
    wolff_per_sweep: int = 0
    max_samples: int | None = None  # adaptive cap; None = 16 * n_samples

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidParameterError("n_samples must be >= 1")
        if self.workers < 1 or self.chains < 1 or self.thinning < 1:
            raise InvalidParameterError("workers, chains and thinning must be >= 1")

    @property
    def cap(self) -> int:
        return self.max_samples or 16 * self.n_samples

    def with_samples(self, n: int) -> SamplingPlan:
        return replace(self, n_samples=int(n))


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int
    model: ModelParams | None = None
    hits: int | None = None

    @classmethod
    def from_hits(cls, hits: int, n: int, seed: int, model=None) -> Estimate:
        m = hits / n
        se = math.sqrt(m * (1.0 - m) / (n - 1)) if n > 1 else 0.0
        return cls(m, se, n, seed, model, int(hits))

    @classmethod
    def from_values(cls, values, seed: int, model=None) -> Estimate:
        v = np.asarray(values, dtype=np.float64)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(float(v.mean()), se, int(v.size), seed, model)

    def ci(self, z: float = Z99) -> tuple[float, float]:
        return self.mean - z * self.stderr, self.mean + z * self.stderr


# ------------------------------------------------------------- execution ---

def _ranges(start: int, stop: int, workers: int):
    edges = np.linspace(start, stop, workers + 1).round().astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _pmap(fn: Callable, args: list, workers: int) -> list:
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("fork")) as ex:
        return list(ex.map(fn, *zip(*args)))


def _hits_task(prm, seed, start, stop, p, x_lo, y_lo, ny, nx):
    return int(K.bernoulli_hits(prm, np.uint64(seed), start, stop, p, x_lo, y_lo, ny, nx))


def _split_task(seed, start, stop, p, n, vx, vy):
    return int(K.bernoulli_split_hits(np.uint64(seed), start, stop, p, n, vx, vy))


def _radii_task(seed, start, stop, p, M):
    out = np.empty(stop - start, dtype=np.int64)
    K.bernoulli_radii(np.uint64(seed), start, stop, p, M, out)
    return out


def _clusters_task(seed, start, stop, p, M, targets):
    out = np.empty((stop - start, 5), dtype=np.float64)
    K.bernoulli_origin_clusters(np.uint64(seed), start, stop, p, M, targets, out)
    return out


def _bernoulli_hits(prm, p, region: SiteSet, seed, start, stop, workers) -> int:
    r = region.rect
    args = [(prm, seed, a, b, float(p), r.x_lo, r.y_lo, r.ny, r.nx) for a, b in _ranges(start, stop, workers)]
    return sum(_pmap(_hits_task, args, workers))


# ------------------------------------------------------------------ Ising ---

def _chain_counts(n: int, chains: int):
    base, extra = divmod(n, chains)
    return [base + (1 if c < extra else 0) for c in range(chains)]


def _ising_chain(params, region, bc, plan, chain_id, count, per_sample):
    """Run one chain; ``per_sample(spins, region)`` returns a row per sample."""
    rng = np.random.default_rng([plan.seed, chain_id])
    start = np.where(region.mask, rng.choice(np.array([-1, 1], dtype=np.int8), size=region.rect.shape), 0)
    chain = Chain(SpinConfig(region, start.astype(np.int8), bc), params, rng)
    burn = default_burn_in(region) if plan.burn_in is None else plan.burn_in

    def advance(k):
        for _ in range(k):
            chain.sweep()
            if plan.wolff_per_sweep:
                chain.wolff(plan.wolff_per_sweep)

    advance(burn)
    rows = []
    for s in range(count):
        if s:
            advance(plan.thinning)
        rows.append(per_sample(chain.spins, region))
    return rows


class _EventRows:
    def __init__(self, prms):
        self.prms = prms

    def __call__(self, spins, region):
        r = region.rect
        work = spins.copy()
        vis = np.zeros(work.shape, dtype=np.uint8)
        queue = np.empty(work.size, dtype=np.int64)
        sheet = np.zeros(work.shape, dtype=np.int64)
        return [bool(K.eval_event(prm, work, np.uint64(0), 0.0, r.x_lo, r.y_lo, vis, queue, sheet))
                for prm in self.prms]


class _ClusterRows:
    def __init__(self, M, targets):
        self.M = M
        self.targets = targets

    def __call__(self, spins, region):
        r = region.rect
        work = spins.copy()
        vis = np.zeros(work.shape, dtype=np.uint8)
        queue = np.empty(work.size, dtype=np.int64)
        size, radius, touch, sumsq, mask = K.origin_cluster(work, np.uint64(0), 0.0, r.x_lo, r.y_lo,
                                                            self.M, self.targets, vis, queue)
        return [size, radius, 1.0 if touch else 0.0, sumsq, mask]


def _ising_task(params, region, bc, plan, chain_id, count, per_sample):
    return _ising_chain(params, region, bc, plan, chain_id, count, per_sample)


def _ising_rows(params, region, bc, plan, per_sample) -> np.ndarray:
    counts = _chain_counts(plan.n_samples, plan.chains)
    args = [(params, region, bc, plan, c, k, per_sample) for c, k in enumerate(counts) if k > 0]
    chunks = _pmap(_ising_task, args, plan.workers)
    return np.array([row for chunk in chunks for row in chunk], dtype=np.float64)


# -------------------------------------------------------------- estimates ---

def estimate_probs(events: Sequence[EventSpec], model: ModelParams, geometry, plan: SamplingPlan,
                   bc: BoundaryCondition | None = None) -> list[Estimate]:
    """Estimates of several events on common samples (coupled)."""
    region = as_region(geometry)
    for ev in events:
        check_region(region, ev)
    prms = [ev.encode() for ev in events]
    n = plan.n_samples
    if not model.is_ising:
        return [Estimate.from_hits(_bernoulli_hits(prm, model.p, region, plan.seed, 0, n, plan.workers),
                                   n, plan.seed, model) for prm in prms]
    rows = _ising_rows(model, region, bc or BoundaryCondition(), plan, _EventRows(prms))
    return [Estimate.from_hits(int(rows[:, k].sum()), n, plan.seed, model) for k in range(len(prms))]


def estimate_prob(event: EventSpec, model: ModelParams, geometry, plan: SamplingPlan,
                  bc: BoundaryCondition | None = None) -> Estimate:
    """Monte Carlo probability of ``event``; stderr = sample sd / sqrt(n)."""
    return estimate_probs([event], model, geometry, plan, bc)[0]


def crossing_event(n: int) -> Crossing:
    return Crossing(Rect(-n, n, -n, n), "h", 1)


def one_arm_curve(model: ModelParams, ns: Sequence[int], plan: SamplingPlan,
                  bc: BoundaryCondition | None = None) -> list[Estimate]:
    """pi(n) = P(O joined to the inner boundary of S(n)) for each n, coupled."""
    from .events import OneArm

    ns = [int(n) for n in ns]
    if not model.is_ising:
        radii = origin_radii(model.p, max(ns), plan)
        return [Estimate.from_hits(int((radii >= n).sum()), radii.size, plan.seed, model) for n in ns]
    return estimate_probs([OneArm(n) for n in ns], model, max(ns), plan, bc)


def origin_radii(p: float, M: int, plan: SamplingPlan, start: int = 0) -> np.ndarray:
    """Sup-radius of the origin (+)-cluster per sample, capped at M (-1 if O is minus)."""
    args = [(plan.seed, a, b, float(p), int(M)) for a, b in _ranges(start, start + plan.n_samples, plan.workers)]
    return np.concatenate(_pmap(_radii_task, args, plan.workers))


def four_arm_curve(p: float, ns: Sequence[int], plan: SamplingPlan, site=(0, 0)) -> list[Estimate]:
    """mu(Omega(v, S(n))) in Bernoulli mode via the arm decomposition kernel."""
    out = []
    model = ModelParams.bernoulli(p)
    for n in ns:
        args = [(plan.seed, a, b, float(p), int(n), int(site[0]), int(site[1]))
                for a, b in _ranges(0, plan.n_samples, plan.workers)]
        hits = sum(_pmap(_split_task, args, plan.workers))
        out.append(Estimate.from_hits(hits, plan.n_samples, plan.seed, model))
    return out


def halfplane_curve(p: float, ns: Sequence[int], plan: SamplingPlan, kind: str = "E2") -> list[Estimate]:
    model = ModelParams.bernoulli(p)
    return [estimate_prob(HalfPlane(int(n), kind), model, int(n), plan) for n in ns]


# ----------------------------------------------------- correlation length ---

@dataclass(frozen=True)
class ThresholdPoint:
    n: int
    estimate: Estimate
    decision: str  # "cleared", "not-cleared" or "undecided"


@dataclass(frozen=True)
class CorrelationLength:
    L: int
    status: str              # "resolved" or "unresolved"
    side: str | None         # "super", "sub" or None
    trace: tuple = ()


class _CrossingProbe:
    """Coupled crossing estimates of S(n) with incremental sample doubling."""

    def __init__(self, model: ModelParams, plan: SamplingPlan, bc):
        self.model = model
        self.plan = plan
        self.bc = bc
        self.cache: dict[int, Estimate] = {}

    def estimate(self, n: int, samples: int) -> Estimate:
        old = self.cache.get(n)
        if old is not None and old.n_samples >= samples:
            return old
        if self.model.is_ising:
            est = estimate_prob(crossing_event(n), self.model, n, self.plan.with_samples(samples), self.bc)
        else:
            region = as_region(n)
            prm = crossing_event(n).encode()
            done, hits = (old.n_samples, old.hits) if old is not None else (0, 0)
            hits += _bernoulli_hits(prm, self.model.p, region, self.plan.seed, done, samples, self.plan.workers)
            est = Estimate.from_hits(hits, samples, self.plan.seed, self.model)
        self.cache[n] = est
        return est


def _decide(est: Estimate, eps: float, side: str | None):
    lo, hi = est.ci()
    sides = [side] if side else ["super", "sub"]
    for s in sides:
        if (s == "super" and lo >= 1.0 - eps) or (s == "sub" and hi <= eps):
            return "cleared", s
    if (side == "super" and hi < 1.0 - eps) or (side == "sub" and lo > eps):
        return "not-cleared", side
    if side is None and hi < 1.0 - eps and lo > eps:
        return "not-cleared", None
    return "undecided", None


def correlation_length(model: ModelParams, eps: float, n_max: int, plan: SamplingPlan,
                       side: str | None = None, bc: BoundaryCondition | None = None) -> CorrelationLength:
    """Smallest n with P(horizontal (+)-crossing of S(n)) >= 1 - eps (super) or <= eps (sub).

    A size clears when the 99% interval lies on the clearing side; an
    undecided size doubles its sample count up to ``plan.cap`` and is
    otherwise treated as not cleared.  Sizes are scanned dyadically, then the
    last octave is bisected.  ``side`` is detected from the first clearing
    size when not given.
    """
    if not 0.0 < eps < 0.5:
        raise InvalidParameterError("eps must lie in (0, 1/2)")
    if side not in (None, "super", "sub"):
        raise InvalidParameterError("side must be 'super', 'sub' or None")
    probe = _CrossingProbe(model, plan, bc)
    trace = []

    def test(n):
        nonlocal side
        samples = plan.n_samples
        while True:
            est = probe.estimate(n, samples)
            decision, s = _decide(est, eps, side)
            if decision != "undecided" or samples >= plan.cap:
                break
            samples = min(2 * samples, plan.cap)
        trace.append(ThresholdPoint(n, est, decision))
        if decision == "cleared":
            side = s
            return True
        return False

    lo, hi = 0, None
    n = 1
    while n <= n_max:
        if test(n):
            hi = n
            break
        lo = n
        n = n * 2 if n * 2 <= n_max or n == n_max else n_max
    if hi is None:
        return CorrelationLength(n_max, "unresolved", side, tuple(trace))
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if test(mid):
            hi = mid
        else:
            lo = mid
    return CorrelationLength(hi, "resolved", side, tuple(trace))


# ---------------------------------------------------------- critical point ---

@dataclass(frozen=True)
class CriticalPoint:
    value: float
    tol: float
    per_size: tuple = ()   # (n_ref, estimate) pairs
    status: str = "ok"


def _bisect(f, lo, hi, tol):
    flo, fhi = f(lo), f(hi)
    if not flo < 0.5 <= fhi:
        raise NoBracketError(f"crossing probability does not straddle 1/2 on [{lo}, {hi}]: {flo}, {fhi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def estimate_critical_point(family: ModelParams, tol: float, plan: SamplingPlan,
                            n_refs: Sequence[int] | None = None, bracket: tuple | None = None,
                            bc: BoundaryCondition | None = None) -> CriticalPoint:
    """Parameter where the square-crossing probability of S(n_ref) equals 1/2.

    Bernoulli families bisect p on coupled samples; the estimate at the
    largest n_ref is reported.  Ising families at T <= T_C return 0,
    above it they bisect h on independent chains.
    """
    if tol <= 0:
        raise InvalidParameterError("tol must be > 0")
    if family.is_ising:
        if family.T <= T_C:
            return CriticalPoint(0.0, tol, (), "low-temperature")
        n_refs = tuple(n_refs or (4,))
        lo, hi = bracket or (0.0, 2.0)

        def f_ising(n):
            return lambda h: estimate_prob(crossing_event(n), family.with_field(h), n, plan, bc).mean
        per = tuple((n, _bisect(f_ising(n), lo, hi, tol / 2)) for n in n_refs)
        return CriticalPoint(per[-1][1], tol, per)
    n_refs = tuple(n_refs or (32, 64, 128))
    lo, hi = bracket or (0.3, 0.9)

    def f_bern(n):
        prm = crossing_event(n).encode()
        region = as_region(n)
        return lambda p: _bernoulli_hits(prm, p, region, plan.seed, 0, plan.n_samples, plan.workers) / plan.n_samples
    per = tuple((n, _bisect(f_bern(n), lo, hi, tol / 4)) for n in n_refs)
    spread = max(v for _, v in per) - min(v for _, v in per)
    return CriticalPoint(per[-1][1], tol, per, "ok" if spread <= 2 * tol else "size-drift")


# ---------------------------------------------------------------- L0(delta) ---

def half_octave_grid(n_max: int) -> list[int]:
    """1, 2, 3, 4, 6, 8, 12, 16, ... up to n_max."""
    out = {1}
    k = 1
    while k <= n_max:
        out.add(k)
        if 3 * k // 2 <= n_max and k >= 2:
            out.add(3 * k // 2)
        k *= 2
    return sorted(n for n in out if n <= n_max)


@dataclass
class FourArmScan:
    """Critical four-arm probabilities mu(Omega(O, S(n))) on a fixed grid, memoized."""

    p_c: float
    plan: SamplingPlan
    n_max: int = 1024
    grid: list = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.grid:
            self.grid = half_octave_grid(self.n_max)

    def estimate(self, n: int) -> Estimate:
        if n not in self.values:
            self.values[n] = four_arm_curve(self.p_c, [n], self.plan)[0]
        return self.values[n]


@dataclass(frozen=True)
class L0Result:
    n: int
    status: str
    trace: tuple = ()


def L0_of_delta(delta: float, plan: SamplingPlan | None = None, p_c: float | None = None,
                n_max: int = 1024, scan: FourArmScan | None = None) -> L0Result:
    """min{n on the grid : n^2 * mu_cr(Omega(O, S(n))) >= 1/delta}.

    Minimizing over a fixed grid of memoized estimates makes the result
    non-increasing in delta by construction.
    """
    if delta <= 0:
        raise InvalidParameterError("delta must be > 0")
    if scan is None:
        if plan is None or p_c is None:
            raise InvalidParameterError("need a FourArmScan or (plan, p_c)")
        scan = FourArmScan(p_c, plan, n_max)
    trace = []
    for n in scan.grid:
        est = scan.estimate(n)
        trace.append((n, est))
        if n * n * est.mean >= 1.0 / delta:
            return L0Result(n, "resolved", tuple(trace))
    return L0Result(scan.grid[-1], "unresolved", tuple(trace))


# ------------------------------------------------------- cluster statistics ---

def _ratio_se(a, b):
    """Delta-method stderr of mean(a) / mean(b)."""
    n = a.size
    ma, mb = a.mean(), b.mean()
    if mb == 0 or n < 2:
        return 0.0
    r = ma / mb
    cov = np.cov(np.vstack([a, b]), ddof=1)
    var = (cov[0, 0] - 2 * r * cov[0, 1] + r * r * cov[1, 1]) / (mb * mb * n)
    return float(math.sqrt(max(var, 0.0)))


@dataclass
class ClusterSample:
    """Per-sample origin-cluster rows: size, radius, touches, sum |v|_1^2, target mask."""

    model: ModelParams
    M: int
    seed: int
    rows: np.ndarray
    targets: tuple = ()

    @property
    def size(self):
        return self.rows[:, 0]

    @property
    def radius(self):
        return self.rows[:, 1]

    @property
    def finite(self):
        return self.rows[:, 2] == 0.0

    def _est(self, values) -> Estimate:
        return Estimate.from_values(values, self.seed, self.model)

    def pi(self, n: int) -> Estimate:
        """P(the origin cluster reaches sup-distance n)."""
        if n > self.M:
            raise InvalidParameterError(f"n={n} exceeds the sampled box radius {self.M}")
        return self._est((self.radius >= n).astype(np.float64))

    def chi(self) -> Estimate:
        return self.moment(1.0)

    def moment(self, t: float) -> Estimate:
        """E[size^t ; finite]."""
        s = self.size
        return self._est(np.where(self.finite & (s > 0), s ** t, 0.0))

    def kappa(self) -> Estimate:
        s = self.size
        return self._est(np.where(self.finite & (s > 0), 1.0 / np.maximum(s, 1.0), 0.0))

    def tau(self, x) -> Estimate:
        k = self.targets.index(tuple(x))
        bits = (self.rows[:, 4].astype(np.int64) >> k) & 1
        return self._est(bits.astype(np.float64))

    def xi(self) -> Estimate:
        """sqrt(E[sum |v|^2 ; finite] / E[size ; finite])."""
        fin = self.finite
        a = np.where(fin, self.rows[:, 3], 0.0)
        b = np.where(fin, self.size, 0.0)
        if b.mean() == 0:
            return Estimate(0.0, 0.0, a.size, self.seed, self.model)
        r = a.mean() / b.mean()
        se = _ratio_se(a, b) / (2.0 * math.sqrt(r)) if r > 0 else 0.0
        return Estimate(math.sqrt(r), se, a.size, self.seed, self.model)

    def size_given_radius(self, n: int) -> Estimate:
        """E[size | n <= radius < 2n]; needs 2n <= M so the clusters are complete."""
        if 2 * n > self.M:
            raise InvalidParameterError("need 2n <= M")
        sel = (self.radius >= n) & (self.radius < 2 * n)
        if sel.sum() == 0:
            return Estimate(float("nan"), float("nan"), 0, self.seed, self.model)
        return self._est(self.size[sel])

    def truncated_fraction(self) -> float:
        nonempty = self.size > 0
        return float((~self.finite & nonempty).sum() / max(nonempty.sum(), 1))


def origin_clusters(model: ModelParams, M: int, plan: SamplingPlan, targets=(),
                    bc: BoundaryCondition | None = None) -> ClusterSample:
    """Full origin (+)-clusters inside S(M), one row per sample."""
    tg = np.array([tuple(t) for t in targets], dtype=np.int64).reshape(-1, 2)
    if tg.shape[0] > 60:
        raise InvalidParameterError("at most 60 two-point targets")
    if not model.is_ising:
        args = [(plan.seed, a, b, float(model.p), int(M), tg) for a, b in _ranges(0, plan.n_samples, plan.workers)]
        rows = np.concatenate(_pmap(_clusters_task, args, plan.workers))
    else:
        rows = _ising_rows(model, as_region(M), bc or BoundaryCondition(), plan, _ClusterRows(M, tg))
    return ClusterSample(model, M, plan.seed, rows, tuple(tuple(int(v) for v in t) for t in tg))


@dataclass(frozen=True)
class ClusterObservables:
    theta: Estimate
    n_ref: int
    chi: Estimate
    kappa: Estimate
    xi: Estimate
    tau: dict
    moments: dict
    truncated_fraction: float
    sample: ClusterSample = field(repr=False, default=None)

    def moment(self, t: float) -> Estimate:
        return self.sample.moment(t)


def cluster_observables(model: ModelParams, geometry: int, plan: SamplingPlan, targets=(),
                        L_hat: int | None = None, n_ref_factor: int = 4, moments=(1.0, 2.0),
                        bc: BoundaryCondition | None = None) -> ClusterObservables:
    """theta, chi, kappa, moments, tau and xi from origin clusters in S(geometry).

    theta is the one-arm probability at n_ref = n_ref_factor * L_hat (the
    box radius when L_hat is None, and clipped to it).  Finite means not
    touching the box boundary.
    """
    M = int(geometry)
    cs = origin_clusters(model, M, plan, targets, bc)
    n_ref = M if L_hat is None else min(M, n_ref_factor * int(L_hat))
    return ClusterObservables(
        theta=cs.pi(n_ref), n_ref=n_ref, chi=cs.chi(), kappa=cs.kappa(), xi=cs.xi(),
        tau={t: cs.tau(t) for t in cs.targets}, moments={t: cs.moment(t) for t in moments},
        truncated_fraction=cs.truncated_fraction(), sample=cs)


# ------------------------------------------------------------ regression ---

@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    slope_stderr: float
    n_points: int


def fit_exponent(points: Sequence[tuple[float, Estimate]]) -> ExponentFit:
    """Weighted least squares of log(mean) on log(n), weights (mean / stderr)^2.

    With all stderr zero the fit is unweighted and the slope error comes from
    the residuals.
    """
    if len({n for n, _ in points}) < 2:
        raise InvalidDataError("need at least two distinct abscissae")
    ns = np.array([float(n) for n, _ in points])
    means = np.array([e.mean for _, e in points])
    ses = np.array([e.stderr for _, e in points])
    if np.any(ns <= 0) or np.any(~(means > 0)):
        raise InvalidDataError("sizes and means must be positive")
    x = np.log(ns)
    y = np.log(means)
    X = np.column_stack([x, np.ones_like(x)])
    rel = ses / means
    if np.all(rel > 0):
        w = 1.0 / rel ** 2
        Xw = X * np.sqrt(w)[:, None]
        cov = np.linalg.inv(Xw.T @ Xw)
        beta = cov @ (Xw.T @ (y * np.sqrt(w)))
        se = math.sqrt(cov[0, 0])
    else:
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ beta
        dof = max(len(y) - 2, 1)
        s2 = float(resid @ resid) / dof
        se = math.sqrt(s2 * np.linalg.inv(X.T @ X)[0, 0])
    return ExponentFit(float(beta[0]), float(beta[1]), float(se), len(points))


# ---------------------------------------------------------------- scaling ---

def _relations(dr: float, nu: float) -> dict:
    d = 2.0 * dr - 1.0
    return {
        "delta": d,
        "eta": 2.0 / dr,
        "beta": 2.0 * nu / (d + 1.0),
        "gamma": 2.0 * nu * (d - 1.0) / (d + 1.0),
        "Delta_k": 2.0 * nu * d / (d + 1.0),
    }


@dataclass(frozen=True)
class ScalingReport:
    inputs: dict      # name -> (value, stderr)
    derived: dict     # name -> (value, stderr)
    residuals: dict   # name -> (measured - derived, z-score)

    def to_dict(self) -> dict:
        return {"inputs": self.inputs, "derived": self.derived, "residuals": self.residuals}


def scaling_report(delta_r: tuple[float, float], nu: tuple[float, float],
                   measured: dict | None = None) -> ScalingReport:
    """Exponents implied by (delta_r, nu) with first-order error propagation."""
    (dr, sdr), (nv, snu) = delta_r, nu
    base = _relations(dr, nv)
    hdr = 1e-6 * max(1.0, abs(dr))
    hnu = 1e-6 * max(1.0, abs(nv))
    up_dr, dn_dr = _relations(dr + hdr, nv), _relations(dr - hdr, nv)
    up_nu, dn_nu = _relations(dr, nv + hnu), _relations(dr, nv - hnu)
    derived = {}
    for k, v in base.items():
        g_dr = (up_dr[k] - dn_dr[k]) / (2 * hdr)
        g_nu = (up_nu[k] - dn_nu[k]) / (2 * hnu)
        derived[k] = (v, math.hypot(g_dr * sdr, g_nu * snu))
    residuals = {}
    for k, (mv, ms) in (measured or {}).items():
        if k in derived:
            dv, ds = derived[k]
            s = math.hypot(ms, ds)
            residuals[k] = (mv - dv, (mv - dv) / s if s > 0 else float("inf") if mv != dv else 0.0)
    return ScalingReport({"delta_r": (dr, sdr), "nu": (nv, snu)}, derived, residuals)


def exponents_from_fits(one_arm: ExponentFit, four_arm: ExponentFit) -> tuple[tuple, tuple]:
    """(delta_r, nu) with stderrs from pi(n) ~ n^(-1/delta_r) and Omega ~ n^(1/nu - 2)."""
    s1, e1 = one_arm.slope, one_arm.slope_stderr
    s4, e4 = four_arm.slope, four_arm.slope_stderr
    dr = -1.0 / s1
    nu = 1.0 / (2.0 + s4)
    return (dr, e1 / s1 ** 2), (nu, e4 / (2.0 + s4) ** 2)
