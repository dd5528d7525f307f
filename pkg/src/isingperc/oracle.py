"""Exact finite-volume probabilities by exhaustive enumeration (at most 25 sites).

Configuration index c encodes a spin assignment: bit k of c is set iff the
k-th region site in row-major order is plus.  Energies are tabulated once
along a Gray-code walk as integer pairs (K, M) with

    H = -K - h * M,   K = (bond sum) + sum_x b_x s_x,   M = sum_x s_x,

so probabilities at any field h follow from the same tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _kernels as K
from .errors import CapacityError, InvalidGeometryError
from .events import EventSpec, check_support
from .gibbs import (FREE, PERIODIC, BoundaryCondition, InterpolationSchedule, ModelParams,
                    SpinConfig, as_region, topology)
from .lattice import SiteSet

MAX_SITES = 25

Event = Union[EventSpec, Callable[[SpinConfig], bool]]


def _default_bc(region: SiteSet) -> BoundaryCondition:
    full = bool(region.mask.all())
    if full and region.rect.nx >= 3 and region.rect.ny >= 3:
        return BoundaryCondition(PERIODIC)
    return BoundaryCondition(FREE)


@dataclass(frozen=True)
class _And:
    a: object
    b: object


class _Space:
    """The 2^n configurations of a region and their energy tables."""

    def __init__(self, region: SiteSet, bc: BoundaryCondition):
        n = len(region)
        if n > MAX_SITES:
            raise CapacityError(f"{n} sites exceed the enumeration cap of {MAX_SITES}")
        self.region = region
        self.bc = bc
        self.n = n
        rows, cols = np.nonzero(region.mask)
        self.rows = rows.astype(np.int64)
        self.cols = cols.astype(np.int64)
        top = topology(region, bc)
        self.K, self.M = K.enumerate_energies(top.nbr_idx, top.bfield, n)
        self.template = np.zeros(region.rect.shape, dtype=np.int8)
        self._indicators: dict[str, np.ndarray] = {}

    def config(self, index: int) -> SpinConfig:
        spins = self.template.copy()
        bits = (int(index) >> np.arange(self.n)) & 1
        spins[self.rows, self.cols] = np.where(bits == 1, 1, -1)
        return SpinConfig(self.region, spins, self.bc)

    def indicator(self, event) -> np.ndarray:
        if isinstance(event, _And):
            return self.indicator(event.a) & self.indicator(event.b)
        if isinstance(event, EventSpec):
            key = event.to_text()
            if key not in self._indicators:
                check_support(self.config(0), event)
                r = self.region.rect
                self._indicators[key] = K.enumerate_indicator(
                    event.encode(), self.template, self.rows, self.cols, r.x_lo, r.y_lo)
            return self._indicators[key]
        return np.fromiter((bool(event(self.config(c))) for c in range(1 << self.n)),
                           dtype=np.uint8, count=1 << self.n)


_LAST_SPACE: list = []


def _shared_space(region: SiteSet, bc: BoundaryCondition) -> _Space:
    """The most recent space is kept so repeated Russo checks reuse tables and indicators."""
    key = (region.rect, region.mask.tobytes(), bc)
    if _LAST_SPACE and _LAST_SPACE[0][0] == key:
        return _LAST_SPACE[0][1]
    space = _Space(region, bc)
    _LAST_SPACE[:] = [(key, space)]
    return space


def _empty():
    return np.empty(0, dtype=np.float64)


@dataclass
class ExactMeasure:
    """Exact Gibbs (or Bernoulli) measure on a small region."""

    params: ModelParams
    space: _Space
    probs: np.ndarray
    log_Z: float

    @property
    def region(self) -> SiteSet:
        return self.space.region

    @property
    def bc(self) -> BoundaryCondition:
        return self.space.bc

    @property
    def Z(self) -> float:
        return math.exp(self.log_Z)

    def total_mass(self) -> float:
        return float(K.neumaier_sum(self.probs, _empty(), np.empty(0, np.uint8)))

    def prob(self, event: Event) -> float:
        ind = self.space.indicator(event)
        return float(K.neumaier_sum(self.probs, _empty(), ind))

    def expect(self, values: np.ndarray, event: Event | None = None) -> float:
        """E[values; event] for a per-configuration array ``values``."""
        ind = np.empty(0, np.uint8) if event is None else self.space.indicator(event)
        return float(K.neumaier_sum(np.asarray(values, dtype=np.float64), self.probs, ind))

    def conditional(self, event: Event, given: Event) -> float:
        return self.prob(_And(event, given)) / self.prob(given)

    def atom(self, config: SpinConfig) -> float:
        return float(self.probs[self.index_of(config)])

    def index_of(self, config: SpinConfig) -> int:
        s = config.spins[self.space.rows, self.space.cols]
        return int(((s == 1).astype(np.int64) << np.arange(self.space.n)).sum())

    def site_conditional(self, config: SpinConfig, v) -> float:
        """Exact P(spin(v) = +1 | all other spins as in ``config``)."""
        plus = config if config.spin(v) == 1 else config.flipped(v)
        a = self.atom(plus)
        b = self.atom(plus.flipped(v))
        return a / (a + b)


def _weights(space: _Space, params: ModelParams, h: float | None = None):
    if params.is_ising:
        field = params.h if h is None else h
        logw = params.beta * (space.K.astype(np.float64) + field * space.M.astype(np.float64))
        shift = float(logw.max())
        w = np.exp(logw - shift)
        s = float(K.neumaier_sum(w, _empty(), np.empty(0, np.uint8)))
        return w / s, shift + math.log(s)
    p = params.p
    nplus = (space.M.astype(np.int64) + space.n) // 2
    w = np.power(p, nplus) * np.power(1.0 - p, space.n - nplus)
    return w, 0.0  # already normalized; log Z = 0


def enumerate_measure(region, params: ModelParams, bc: BoundaryCondition | None = None) -> ExactMeasure:
    """Exact measure by summing over all 2^|V| configurations.

    ``bc`` defaults to periodic on full rectangles with both sides >= 3 and
    free otherwise.  In Bernoulli mode ``bc`` is irrelevant to the weights.
    """
    region = as_region(region)
    bc = bc or _default_bc(region)
    space = _Space(region, bc)
    probs, log_Z = _weights(space, params)
    return ExactMeasure(params, space, probs, log_Z)


# ------------------------------------------------------------------ Russo ---

@dataclass(frozen=True)
class RussoResult:
    lhs: float
    rhs: float
    gap: float

    @property
    def rel_gap(self) -> float:
        return self.gap / max(abs(self.lhs), 1.0)


class _FieldFamily:
    """Exact t -> mu_t(A) on a torus via (K, M) histograms."""

    def __init__(self, space: _Space, T: float, ind: np.ndarray):
        self.beta = 1.0 / T
        Kmin = int(space.K.min())
        Mmin = int(space.M.min())
        nk = int(space.K.max()) - Kmin + 1
        nm = int(space.M.max()) - Mmin + 1
        code = (space.K.astype(np.int64) - Kmin) * nm + (space.M.astype(np.int64) - Mmin)
        all_h = np.bincount(code, minlength=nk * nm).astype(np.float64)
        ev_h = np.bincount(code, weights=ind.astype(np.float64), minlength=nk * nm)
        keep = all_h > 0
        kk, mm = np.divmod(np.nonzero(keep)[0], nm)
        self.Kv = (kk + Kmin).astype(np.float64)
        self.Mv = (mm + Mmin).astype(np.float64)
        self.all = all_h[keep]
        self.ev = ev_h[keep]

    def _w(self, h):
        logw = self.beta * (self.Kv + h * self.Mv)
        return np.exp(logw - logw.max())

    def prob(self, h: float) -> float:
        w = self._w(h)
        z = K.neumaier_sum(self.all, w, np.empty(0, np.uint8))
        return float(K.neumaier_sum(self.ev, w, np.empty(0, np.uint8)) / z)

    def cov_M(self, h: float) -> float:
        """E[M; A] - E[M] P(A)."""
        w = self._w(h)
        none = np.empty(0, np.uint8)
        z = K.neumaier_sum(self.all, w, none)
        pa = K.neumaier_sum(self.ev, w, none) / z
        em = K.neumaier_sum(self.all * self.Mv, w, none) / z
        ema = K.neumaier_sum(self.ev * self.Mv, w, none) / z
        return float(ema - em * pa)


def russo_check(torus, event: Event, h: float, h_c: float, T: float,
                t: float = 0.5, dt: float = 1e-4) -> RussoResult:
    """Compare d/dt mu_t(A) with (|h - h_c| / T) * sum_v E[(s_v - E s_v); A] exactly.

    ``torus`` is a box radius N (the torus S(N)) or a rectangle; the
    derivative is a central difference with one Richardson step.
    """
    region = as_region(torus)
    if not region.mask.all():
        raise InvalidGeometryError("the Russo check needs a full rectangular torus")
    space = _shared_space(region, BoundaryCondition(PERIODIC))
    fam = _FieldFamily(space, T, space.indicator(event))
    sched = InterpolationSchedule(h, h_c)

    def f(s):
        return fam.prob(sched.field(s))

    def central(d):
        return (f(t + d) - f(t - d)) / (2.0 * d)

    lhs = (4.0 * central(dt / 2.0) - central(dt)) / 3.0
    rhs = sched.rate / T * fam.cov_M(sched.field(t))
    return RussoResult(lhs, rhs, abs(lhs - rhs))


# ------------------------------------------------------------- exhaustive ---

@dataclass(frozen=True)
class CheckResult:
    passed: bool
    checked: int
    counterexample: SpinConfig | None = None

    def __bool__(self):
        return self.passed


RELATIONS = {
    "xor": lambda a, b: a != b,
    "eq": lambda a, b: a == b,
    "implies": lambda a, b: (a == 0) | (b == 1),
}


def exhaustive_event_check(region, predicate, bc: BoundaryCondition | None = None) -> CheckResult:
    """Run ``predicate`` on every configuration of ``region``.

    ``predicate`` is either a callable ``SpinConfig -> bool`` or a triple
    ``(event_a, relation, event_b)`` with relation in ``RELATIONS``, which
    is evaluated on whole indicator tables in compiled code.
    """
    region = as_region(region)
    space = _Space(region, bc or BoundaryCondition(FREE))
    total = 1 << space.n
    if isinstance(predicate, tuple):
        a, rel, b = predicate
        ok = RELATIONS[rel](space.indicator(a), space.indicator(b))
        bad = np.flatnonzero(~ok.astype(bool))
        if bad.size:
            return CheckResult(False, total, space.config(int(bad[0])))
        return CheckResult(True, total)
    for c in range(total):
        cfg = space.config(c)
        if not predicate(cfg):
            return CheckResult(False, c + 1, cfg)
    return CheckResult(True, total)
