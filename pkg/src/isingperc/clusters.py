"""(+)-clusters under 4-adjacency and (-*)-clusters under 8-adjacency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as K
from .errors import InvalidGeometryError
from .gibbs import SpinConfig
from .lattice import SiteSet

PLUS = 1
MINUS_STAR = -1


def color_code(color) -> int:
    if color in (PLUS, "plus", "+"):
        return PLUS
    if color in (MINUS_STAR, "minus", "minusstar", "-*", "-"):
        return MINUS_STAR
    raise ValueError(f"unknown colour {color!r}")


@njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True)
def _union_find_labels(spins, mask, color):
    """Canonical labels: each site gets the smallest row-major flat index of its cluster."""
    ny, nx = spins.shape
    n = ny * nx
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for i in range(ny):
        for j in range(nx):
            if not mask[i, j] or spins[i, j] != color:
                continue
            a = i * nx + j
            # already visited neighbours: left, below, and the two lower diagonals for (-*)
            for d in range(4):
                if d == 0:
                    bi, bj = i, j - 1
                elif d == 1:
                    bi, bj = i - 1, j
                elif d == 2:
                    bi, bj = i - 1, j - 1
                else:
                    bi, bj = i - 1, j + 1
                if d >= 2 and color == 1:
                    break
                if bi < 0 or bj < 0 or bj >= nx:
                    continue
                if not mask[bi, bj] or spins[bi, bj] != color:
                    continue
                ra = _find(parent, a)
                rb = _find(parent, bi * nx + bj)
                if ra == rb:
                    continue
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
    canon = -np.ones(n, dtype=np.int64)
    labels = -np.ones((ny, nx), dtype=np.int64)
    for i in range(ny):
        for j in range(nx):
            if not mask[i, j] or spins[i, j] != color:
                continue
            r = _find(parent, i * nx + j)
            if canon[r] < 0:
                canon[r] = i * nx + j
            labels[i, j] = canon[r]
    return labels


@dataclass(frozen=True, eq=False)
class ClusterLabels:
    """Cluster identifiers for one colour.

    ``labels[i, j]`` is -1 off the colour, otherwise the row-major flat index
    of the first site of the cluster.  ``ids``, ``sizes``, ``extent`` (max
    |v|_inf) and ``touches`` (left, right, bottom, top sides of the region
    rectangle) are aligned per cluster, ordered by id.
    """

    color: int
    region: SiteSet
    labels: np.ndarray
    ids: np.ndarray
    sizes: np.ndarray
    extent: np.ndarray
    touches: np.ndarray

    @property
    def count(self) -> int:
        return int(self.ids.size)

    def label(self, x) -> int:
        return int(self.labels[self.region.rect.local(x)])

    def cluster_of(self, x) -> SiteSet:
        lab = self.label(x)
        if lab < 0:
            raise ValueError(f"site {tuple(x)} does not carry this colour")
        return SiteSet(self.region.rect, self.labels == lab)

    def size_of(self, lab: int) -> int:
        return int(self.sizes[np.searchsorted(self.ids, lab)])


def label_clusters(config: SpinConfig, color) -> ClusterLabels:
    c = color_code(color)
    rect = config.rect
    labels = _union_find_labels(np.asarray(config.spins), config.region.mask, c)
    ids, inverse, sizes = np.unique(labels[labels >= 0], return_inverse=True, return_counts=True)
    rows, cols = np.nonzero(labels >= 0)
    norm = np.maximum(np.abs(cols + rect.x_lo), np.abs(rows + rect.y_lo))
    extent = np.zeros(ids.size, dtype=np.int64)
    np.maximum.at(extent, inverse, norm)
    touches = np.zeros((ids.size, 4), dtype=bool)
    for side, sel in enumerate((cols == 0, cols == rect.nx - 1, rows == 0, rows == rect.ny - 1)):
        touches[inverse[sel], side] = True
    return ClusterLabels(c, config.region, labels, ids, sizes, extent, touches)


@dataclass(frozen=True)
class OriginClusterStats:
    size: int
    radius: int   # -1 when the origin is minus
    touches_boundary: bool


def _region_boundary(region: SiteSet) -> np.ndarray:
    m = np.pad(region.mask, 1)
    inner = m[1:-1, 1:-1]
    all_in = m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    return inner & ~all_in


def origin_cluster_stats(config: SpinConfig, origin=(0, 0)) -> OriginClusterStats:
    """Size and sup-radius of the (+)-cluster of the origin inside the region.

    ``touches_boundary`` flags a cluster reaching a region site with an
    outside neighbour, i.e. statistics truncated by the region.
    """
    if origin not in config.region:
        raise InvalidGeometryError("origin outside the region")
    if config.spin(origin) != 1:
        return OriginClusterStats(0, -1, False)
    cluster = label_clusters(config, PLUS).cluster_of(origin)
    rows, cols = np.nonzero(cluster.mask)
    r = config.rect
    radius = int(np.max(np.maximum(np.abs(cols + r.x_lo - origin[0]), np.abs(rows + r.y_lo - origin[1]))))
    touches = bool((cluster.mask & _region_boundary(config.region)).any())
    return OriginClusterStats(int(rows.size), radius, touches)


def _workspace(config: SpinConfig):
    spins = np.array(config.spins, dtype=np.int8)
    visited = np.zeros(spins.shape, dtype=np.uint8)
    queue = np.empty(spins.size, dtype=np.int64)
    return spins, visited, queue


def connected(config: SpinConfig, A, B, within, color) -> bool:
    """Is some site of A joined to some site of B by a ``color`` path inside ``within``?"""
    c = color_code(color)
    A = A if isinstance(A, SiteSet) else SiteSet.from_sites(A)
    B = B if isinstance(B, SiteSet) else SiteSet.from_sites(B)
    within = within if isinstance(within, SiteSet) else SiteSet.from_sites(within)
    if not within.issubset(config.region):
        raise InvalidGeometryError("`within` must lie inside the configuration region")
    if not (A.issubset(within) and B.issubset(within)):
        raise InvalidGeometryError("A and B must lie inside `within`")
    rect = config.rect
    spins, visited, queue = _workspace(config)
    mask = within.on(rect).astype(np.uint8)
    target = B.on(rect).astype(np.uint8)
    seeds = np.array([r * rect.nx + c_ for r, c_ in (rect.local(a) for a in A)], dtype=np.int64)
    _, _, hit = K.flood(spins, np.uint64(0), 0.0, rect.x_lo, rect.y_lo, 0, rect.ny - 1, 0, rect.nx - 1,
                        0, 0, 0, mask, -1, seeds, c, visited, queue, 0, target, 0, 0)
    return bool(hit)

