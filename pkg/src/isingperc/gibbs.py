"""Spin configurations and samplers for the Ising Gibbs measure and its Bernoulli limit.

Conventions: coupling J = 1 and Boltzmann constant 1, so beta = 1/T.

Randomness.  Bernoulli fields come from a counter-based generator: the spin at
site (x1, x2) of sample ``index`` under ``seed`` is ``+1`` iff
``u(seed, index, x1, x2) < p`` where ``u`` is the splitmix64 finalizer applied
to the packed coordinates and a per-sample key (see ``_kernels``).  Ising
chains take a ``numpy.random.Generator``; heat-bath sweeps consume one
``rng.random`` draw per site in checkerboard order, Wolff moves run a
splitmix64 stream seeded by one ``rng.integers`` draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from . import _kernels as K
from .errors import InvalidGeometryError, InvalidParameterError, UnsupportedOperationError
from .lattice import Box, Rect, Site, SiteSet

# Onsager's critical temperature of the square-lattice Ising model (J = k_B = 1).
# External to this package; only used to pick temperatures above criticality.
T_C = 2.0 / math.log(1.0 + math.sqrt(2.0))

PLUS = "plus"
MINUS = "minus"
FREE = "free"
PERIODIC = "periodic"
FIXED = "fixed"


@dataclass(frozen=True)
class BoundaryCondition:
    tag: str = PERIODIC
    # for FIXED: ((x1, x2, spin), ...) covering every outside l1-neighbour of the region
    fixed: tuple = ()

    def __post_init__(self):
        if self.tag not in (PLUS, MINUS, FREE, PERIODIC, FIXED):
            raise ValueError(f"unknown boundary tag {self.tag!r}")

    @classmethod
    def from_values(cls, values: dict) -> BoundaryCondition:
        return cls(FIXED, tuple(sorted((int(s[0]), int(s[1]), int(v)) for s, v in values.items())))

    def outside_spin(self, y) -> int:
        if self.tag == PLUS:
            return 1
        if self.tag == MINUS:
            return -1
        if self.tag == FREE:
            return 0
        if self.tag == FIXED:
            for a, b, v in self.fixed:
                if (a, b) == (y[0], y[1]):
                    return v
            raise InvalidGeometryError(f"fixed boundary has no spin for outside site {tuple(y)}")
        raise InvalidGeometryError("periodic regions have no outside sites")


@dataclass(frozen=True)
class ModelParams:
    kind: str
    T: float = math.inf
    h: float = 0.0
    p: float = 0.5

    def __post_init__(self):
        if self.kind == "ising":
            if not self.T > 0:
                raise InvalidParameterError("Ising mode needs T > 0")
        elif self.kind == "bernoulli":
            if not 0.0 <= self.p <= 1.0:
                raise InvalidParameterError("Bernoulli mode needs p in [0, 1]")
        else:
            raise InvalidParameterError(f"unknown model kind {self.kind!r}")

    @classmethod
    def ising(cls, T: float, h: float) -> ModelParams:
        return cls("ising", T=float(T), h=float(h))

    @classmethod
    def bernoulli(cls, p: float) -> ModelParams:
        return cls("bernoulli", p=float(p))

    @property
    def is_ising(self) -> bool:
        return self.kind == "ising"

    @property
    def beta(self) -> float:
        if not self.is_ising:
            raise UnsupportedOperationError("Bernoulli mode has no temperature")
        return 1.0 / self.T

    def with_field(self, h: float) -> ModelParams:
        return ModelParams.ising(self.T, h)

    def with_p(self, p: float) -> ModelParams:
        return ModelParams.bernoulli(p)

    def control(self) -> float:
        return self.h if self.is_ising else self.p

    def with_control(self, value: float) -> ModelParams:
        return self.with_field(value) if self.is_ising else self.with_p(value)


@dataclass(frozen=True)
class InterpolationSchedule:
    """h(t) moving linearly from h_c (t = 0) to h (t = 1) on either side."""

    h: float
    h_c: float
    t: float = 1.0

    def field(self, t: float | None = None) -> float:
        t = self.t if t is None else t
        if self.h > self.h_c:
            return self.h_c + t * (self.h - self.h_c)
        return self.h + t * (self.h_c - self.h)

    @property
    def rate(self) -> float:
        """dh/dt, equal to |h - h_c| on both sides."""
        return abs(self.h - self.h_c)


def as_region(geometry) -> SiteSet:
    if isinstance(geometry, SiteSet):
        return geometry
    if isinstance(geometry, Box):
        return geometry.rect().sites()
    if isinstance(geometry, Rect):
        return geometry.sites()
    if isinstance(geometry, int):
        return Box(Site(0, 0), geometry).rect().sites()
    raise InvalidGeometryError(f"cannot interpret {geometry!r} as a region")


@dataclass(frozen=True, eq=False)
class SpinConfig:
    """Spins on a finite region; ``spins[i, j]`` is the site (x_lo + j, y_lo + i).

    Entries of ``spins`` outside the region mask are 0.
    """

    region: SiteSet
    spins: np.ndarray
    boundary: BoundaryCondition = field(default_factory=lambda: BoundaryCondition(FREE))

    def __post_init__(self):
        s = np.asarray(self.spins, dtype=np.int8)
        if s.shape != self.region.rect.shape:
            raise InvalidGeometryError("spin array does not match the region rectangle")
        inside = self.region.mask
        if np.any(np.abs(s[inside]) != 1) or np.any(s[~inside] != 0):
            raise ValueError("spins must be +-1 on the region and 0 elsewhere")
        if self.boundary.tag == PERIODIC and not inside.all():
            raise InvalidGeometryError("periodic boundary needs a full rectangle")
        s.setflags(write=False)
        object.__setattr__(self, "spins", s)

    @classmethod
    def filled(cls, geometry, value: int = 1, boundary: BoundaryCondition | None = None) -> SpinConfig:
        region = as_region(geometry)
        spins = np.where(region.mask, value, 0).astype(np.int8)
        return cls(region, spins, boundary or BoundaryCondition(FREE))

    @classmethod
    def from_function(cls, geometry, fn, boundary: BoundaryCondition | None = None) -> SpinConfig:
        """Spin at each region site given by ``fn(x1, x2) -> +1 | -1``."""
        region = as_region(geometry)
        spins = np.zeros(region.rect.shape, dtype=np.int8)
        for s in region:
            spins[region.rect.local(s)] = fn(s.x1, s.x2)
        return cls(region, spins, boundary or BoundaryCondition(FREE))

    @property
    def rect(self) -> Rect:
        return self.region.rect

    def spin(self, x) -> int:
        if x not in self.region:
            raise InvalidGeometryError(f"site {tuple(x)} outside the region")
        return int(self.spins[self.rect.local(x)])

    def flipped(self, v) -> SpinConfig:
        """The configuration omega^v with the spin at v reversed."""
        if v not in self.region:
            raise InvalidGeometryError(f"site {tuple(v)} outside the region")
        s = self.spins.copy()
        s[self.rect.local(v)] *= -1
        return SpinConfig(self.region, s, self.boundary)

    def with_spins(self, spins: np.ndarray) -> SpinConfig:
        return SpinConfig(self.region, spins, self.boundary)

    def plus_fraction(self) -> float:
        return float((self.spins[self.region.mask] == 1).mean())


# ----------------------------------------------------------------- topology ---

@dataclass(frozen=True)
class Topology:
    flat: np.ndarray       # region sites, row-major, as flat indices into the rect
    nbr_flat: np.ndarray   # (n, 4) flat index of each region neighbour, -1 if none
    nbr_idx: np.ndarray    # (n, 4) same as region-site indices
    bfield: np.ndarray     # (n,) sum of outside neighbour spins
    checker: np.ndarray    # permutation of range(n): even parity sites, then odd
    bonds: int


@lru_cache(maxsize=64)
def _topology_cached(rect: Rect, mask_bytes: bytes, bc: BoundaryCondition) -> Topology:
    mask = np.frombuffer(mask_bytes, dtype=bool).reshape(rect.shape)
    ny, nx = rect.shape
    periodic = bc.tag == PERIODIC
    if periodic and (nx < 3 or ny < 3):
        raise InvalidGeometryError("periodic tori need both sides >= 3")
    rows, cols = np.nonzero(mask)
    flat = rows * nx + cols
    index = -np.ones(ny * nx, dtype=np.int64)
    index[flat] = np.arange(flat.size)
    n = flat.size
    nbr_flat = -np.ones((n, 4), dtype=np.int64)
    nbr_idx = -np.ones((n, 4), dtype=np.int64)
    bfield = np.zeros(n, dtype=np.int64)
    bonds = 0
    for k in range(n):
        i, j = int(rows[k]), int(cols[k])
        for d, (di, dj) in enumerate(((0, 1), (0, -1), (1, 0), (-1, 0))):
            a, b = i + di, j + dj
            if periodic:
                a %= ny
                b %= nx
            if 0 <= a < ny and 0 <= b < nx and mask[a, b]:
                nbr_flat[k, d] = a * nx + b
                nbr_idx[k, d] = index[a * nx + b]
                bonds += 1
            else:
                bfield[k] += bc.outside_spin((rect.x_lo + b, rect.y_lo + a))
    parity = (rows + cols + rect.x_lo + rect.y_lo) % 2
    checker = np.concatenate([np.nonzero(parity == 0)[0], np.nonzero(parity == 1)[0]])
    return Topology(flat, nbr_flat, nbr_idx, bfield, checker, bonds // 2)


def topology(region: SiteSet, bc: BoundaryCondition) -> Topology:
    return _topology_cached(region.rect, region.mask.tobytes(), bc)


# ------------------------------------------------------------------ energy ---

def hamiltonian(config: SpinConfig, h: float) -> float:
    """H = -(1/2) sum over ordered neighbour pairs - sum_x (h + boundary field) spin(x)."""
    top = topology(config.region, config.boundary)
    s = config.spins.ravel().astype(np.int64)[top.flat]
    nb = np.where(top.nbr_idx >= 0, s[np.maximum(top.nbr_idx, 0)], 0)
    pair = 0.5 * float((s[:, None] * nb).sum())
    return -pair - float(((h + top.bfield) * s).sum())


def energy(config: SpinConfig, params: ModelParams) -> float:
    if not params.is_ising:
        raise UnsupportedOperationError("the Bernoulli model has no Hamiltonian")
    return hamiltonian(config, params.h)


def local_field(config: SpinConfig, v, h: float) -> float:
    """Sum of neighbour spins (inside and boundary) plus h at site v."""
    top = topology(config.region, config.boundary)
    i, j = config.rect.local(v)
    k = int(np.searchsorted(top.flat, i * config.rect.nx + j))
    s = config.spins.ravel()
    f = sum(int(s[q]) for q in top.nbr_flat[k] if q >= 0)
    return float(f + top.bfield[k] + h)


def heat_bath_conditional(local_field: float, beta: float) -> float:
    """Probability of +1 given the local field: e^{bf} / (e^{bf} + e^{-bf})."""
    if beta < 0:
        raise InvalidParameterError("beta must be >= 0")
    return 1.0 / (1.0 + math.exp(-2.0 * beta * local_field))


# ---------------------------------------------------------------- samplers ---

def _require_ising(params: ModelParams):
    if not params.is_ising:
        raise UnsupportedOperationError("Markov-chain updates need Ising mode")


class Chain:
    """Mutable Ising Markov chain on one region; the public wrappers copy."""

    def __init__(self, config: SpinConfig, params: ModelParams, rng: np.random.Generator):
        _require_ising(params)
        self.params = params
        self.rng = rng
        self.region = config.region
        self.boundary = config.boundary
        self.spins = np.array(config.spins, dtype=np.int8)
        top = topology(config.region, config.boundary)
        cb = top.checker
        self._sites = top.flat[cb].copy()
        self._nbr = top.nbr_flat[cb].copy()
        self._bf = top.bfield[cb].astype(np.float64)
        self._flat = top.flat
        self._nbr_all = top.nbr_flat
        self._bf_all = top.bfield.astype(np.float64)

    def sweep(self, n: int = 1):
        beta, h = self.params.beta, self.params.h
        for _ in range(n):
            u = self.rng.random(self._sites.size)
            K.heat_bath(self.spins, self._sites, self._nbr, self._bf, beta, h, u)

    def wolff(self, n: int = 1):
        state = np.array([self.rng.integers(0, 2**64, dtype=np.uint64)], dtype=np.uint64)
        K.wolff_ghost(self.spins, self._flat, self._nbr_all, self._bf_all,
                      self.params.beta, self.params.h, state, n)

    def config(self) -> SpinConfig:
        return SpinConfig(self.region, self.spins.copy(), self.boundary)


def heat_bath_sweep(config: SpinConfig, params: ModelParams, rng: np.random.Generator) -> SpinConfig:
    """One checkerboard-ordered heat-bath sweep; returns a new configuration."""
    chain = Chain(config, params, rng)
    chain.sweep()
    return chain.config()


def wolff_ghost_update(config: SpinConfig, params: ModelParams, rng: np.random.Generator,
                       n_flips: int = 1) -> SpinConfig:
    """Wolff cluster moves with a ghost spin for the field; returns a new configuration."""
    chain = Chain(config, params, rng)
    chain.wolff(n_flips)
    return chain.config()


def bernoulli_config(geometry, p: float, seed: int, index: int,
                     boundary: BoundaryCondition | None = None) -> SpinConfig:
    """Exact i.i.d. field for sample ``index`` of stream ``seed``."""
    region = as_region(geometry)
    r = region.rect
    key = np.uint64(K.sample_key(np.uint64(seed), np.uint64(index)))
    spins = K.materialize(key, float(p), r.x_lo, r.y_lo, r.ny, r.nx)
    spins[~region.mask] = 0
    return SpinConfig(region, spins, boundary or BoundaryCondition(FREE))


def default_burn_in(region: SiteSet) -> int:
    return 50 * max(region.rect.nx, region.rect.ny)


def sample(params: ModelParams, geometry, bc: BoundaryCondition | None = None,
           plan=None, rng: np.random.Generator | None = None,
           wolff_per_sweep: int = 0) -> Iterator[SpinConfig]:
    """Endless stream of configurations.

    Bernoulli mode yields exact independent fields.  Ising mode runs a single
    heat-bath chain from a random start: ``plan.burn_in`` sweeps, then one
    configuration every ``plan.thinning`` sweeps (defaults 50 * side and 2).
    ``wolff_per_sweep`` interleaves that many Wolff moves after each sweep.
    """
    region = as_region(geometry)
    bc = bc or BoundaryCondition()
    rng = rng if rng is not None else np.random.default_rng(0)
    burn_in = getattr(plan, "burn_in", None)
    thinning = getattr(plan, "thinning", None) or 2
    if burn_in is None:
        burn_in = default_burn_in(region)
    if burn_in < 0:
        raise InvalidParameterError("burn_in must be >= 0")
    if not params.is_ising:
        seed = int(rng.integers(0, 2**63))
        index = 0
        while True:
            yield bernoulli_config(region, params.p, seed, index, bc)
            index += 1
    start = np.where(region.mask, rng.choice(np.array([-1, 1], dtype=np.int8), size=region.rect.shape), 0)
    chain = Chain(SpinConfig(region, start.astype(np.int8), bc), params, rng)

    def advance(n):
        for _ in range(n):
            chain.sweep()
            if wolff_per_sweep:
                chain.wolff(wolff_per_sweep)

    advance(burn_in)
    while True:
        yield chain.config()
        advance(thinning)
