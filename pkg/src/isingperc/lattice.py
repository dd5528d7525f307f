"""Geometry of Z^2: boxes, rectangles, annuli and the two adjacency relations.

Site sets are dense boolean bitmaps over an enclosing rectangle.  Iteration
is row-major: ascending x2 (rows), then ascending x1 inside a row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InvalidGeometryError

L1 = "L1"
LINF = "Linf"


class Site(NamedTuple):
    x1: int
    x2: int

    def l1(self) -> int:
        return abs(self.x1) + abs(self.x2)

    def linf(self) -> int:
        return max(abs(self.x1), abs(self.x2))


@dataclass(frozen=True)
class Rect:
    """Closed rectangle [x_lo, x_hi] x [y_lo, y_hi]."""

    x_lo: int
    x_hi: int
    y_lo: int
    y_hi: int

    def __post_init__(self):
        if self.x_hi < self.x_lo or self.y_hi < self.y_lo:
            raise InvalidGeometryError(f"empty rectangle {self}")

    @property
    def nx(self) -> int:
        return self.x_hi - self.x_lo + 1

    @property
    def ny(self) -> int:
        return self.y_hi - self.y_lo + 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.ny, self.nx

    def contains(self, other: Rect) -> bool:
        return (self.x_lo <= other.x_lo and other.x_hi <= self.x_hi
                and self.y_lo <= other.y_lo and other.y_hi <= self.y_hi)

    def __contains__(self, x) -> bool:
        return self.x_lo <= x[0] <= self.x_hi and self.y_lo <= x[1] <= self.y_hi

    def local(self, x) -> tuple[int, int]:
        """Array index (row, column) of site x."""
        return x[1] - self.y_lo, x[0] - self.x_lo

    def sites(self) -> SiteSet:
        return SiteSet(self, np.ones(self.shape, dtype=bool))

    def _side(self, sel) -> SiteSet:
        mask = np.zeros(self.shape, dtype=bool)
        mask[sel] = True
        return SiteSet(self, mask)

    def left(self) -> SiteSet:
        return self._side((slice(None), 0))

    def right(self) -> SiteSet:
        return self._side((slice(None), -1))

    def bottom(self) -> SiteSet:
        return self._side((0, slice(None)))

    def top(self) -> SiteSet:
        return self._side((-1, slice(None)))

    def union(self, other: Rect) -> Rect:
        return Rect(min(self.x_lo, other.x_lo), max(self.x_hi, other.x_hi),
                    min(self.y_lo, other.y_lo), max(self.y_hi, other.y_hi))

    def grow(self, k: int) -> Rect:
        return Rect(self.x_lo - k, self.x_hi + k, self.y_lo - k, self.y_hi + k)


@dataclass(frozen=True)
class Box:
    """S(center, n) = {y : |y - center|_inf <= n}."""

    center: Site
    radius: int

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidGeometryError("box radius must be >= 0")

    def rect(self) -> Rect:
        cx, cy = self.center
        n = self.radius
        return Rect(cx - n, cx + n, cy - n, cy + n)


@dataclass(frozen=True)
class Annulus:
    """B(r, R) = [-R, R]^2 minus the open square (-r, r)^2, i.e. r <= |y|_inf <= R."""

    inner: int
    outer: int

    def __post_init__(self):
        if not 1 <= self.inner < self.outer:
            raise InvalidGeometryError(f"annulus needs 1 <= r < R, got r={self.inner}, R={self.outer}")

    def rect(self) -> Rect:
        return Box(Site(0, 0), self.outer).rect()

    def sites(self) -> SiteSet:
        return annulus_sites(self.inner, self.outer)


class SiteSet:
    """Finite set of sites stored as a boolean mask over ``rect``."""

    __slots__ = ("rect", "mask")

    def __init__(self, rect: Rect, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != rect.shape:
            raise InvalidGeometryError(f"mask shape {mask.shape} does not match {rect.shape}")
        mask.setflags(write=False)
        self.rect = rect
        self.mask = mask

    @classmethod
    def from_sites(cls, sites) -> SiteSet:
        sites = [Site(*s) for s in sites]
        if not sites:
            raise InvalidGeometryError("cannot build a bitmap for an empty site list")
        xs = [s.x1 for s in sites]
        ys = [s.x2 for s in sites]
        rect = Rect(min(xs), max(xs), min(ys), max(ys))
        mask = np.zeros(rect.shape, dtype=bool)
        for s in sites:
            mask[rect.local(s)] = True
        return cls(rect, mask)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __iter__(self) -> Iterator[Site]:
        rows, cols = np.nonzero(self.mask)  # row-major order
        for i, j in zip(rows.tolist(), cols.tolist()):
            yield Site(self.rect.x_lo + j, self.rect.y_lo + i)

    def __contains__(self, x) -> bool:
        if x not in self.rect:
            return False
        return bool(self.mask[self.rect.local(x)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SiteSet):
            return NotImplemented
        return set(self) == set(other)

    def __hash__(self):
        return hash(frozenset(self))

    def __repr__(self) -> str:
        return f"SiteSet({len(self)} sites in {self.rect})"

    def on(self, rect: Rect) -> np.ndarray:
        """The mask re-expressed over a containing rectangle."""
        if not rect.contains(self.rect):
            raise InvalidGeometryError(f"{self.rect} is not inside {rect}")
        out = np.zeros(rect.shape, dtype=bool)
        i0, j0 = rect.local((self.rect.x_lo, self.rect.y_lo))
        out[i0:i0 + self.rect.ny, j0:j0 + self.rect.nx] = self.mask
        return out

    def _binary(self, other: SiteSet, op) -> SiteSet:
        rect = self.rect.union(other.rect)
        return SiteSet(rect, op(self.on(rect), other.on(rect)))

    def __or__(self, other: SiteSet) -> SiteSet:
        return self._binary(other, np.logical_or)

    def __and__(self, other: SiteSet) -> SiteSet:
        return self._binary(other, np.logical_and)

    def __sub__(self, other: SiteSet) -> SiteSet:
        return self._binary(other, lambda a, b: a & ~b)

    def issubset(self, other: SiteSet) -> bool:
        return not (self - other).mask.any()

    def isdisjoint(self, other: SiteSet) -> bool:
        return not (self & other).mask.any()


def box_sites(n: int, center=(0, 0)) -> SiteSet:
    return Box(Site(*center), n).rect().sites()


def annulus_sites(r: int, R: int) -> SiteSet:
    if not 1 <= r < R:
        raise InvalidGeometryError(f"annulus needs 1 <= r < R, got r={r}, R={R}")
    rect = Box(Site(0, 0), R).rect()
    ys, xs = np.mgrid[-R:R + 1, -R:R + 1]
    return SiteSet(rect, np.maximum(abs(xs), abs(ys)) >= r)


_L1_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_LINF_STEPS = _L1_STEPS + ((1, 1), (1, -1), (-1, 1), (-1, -1))


def neighbor_steps(mode: str):
    if mode == L1:
        return _L1_STEPS
    if mode == LINF:
        return _LINF_STEPS
    raise ValueError(f"unknown adjacency mode {mode!r}")


def neighbors(x, mode: str = L1) -> SiteSet:
    """The 4 (L1) or 8 (Linf) sites adjacent to x."""
    return SiteSet.from_sites([(x[0] + a, x[1] + b) for a, b in neighbor_steps(mode)])


def inner_boundary(n: int, center=(0, 0)) -> SiteSet:
    """The 8n sites of S(center, n) at sup-distance exactly n."""
    if n < 1:
        raise InvalidGeometryError("inner boundary needs n >= 1")
    rect = Box(Site(*center), n).rect()
    mask = np.zeros(rect.shape, dtype=bool)
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
    return SiteSet(rect, mask)
