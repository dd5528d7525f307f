"""Event detectors: crossings, circuits, arms, half-plane arm events, pivotality.

Every event has an ``EventSpec`` value that encodes to a flat integer vector
consumed by the numba kernels, and a one-line text form used by the CLI::

    always
    spin 0,0 +
    crossing h plus rect=-8..8x-8..8
    circuit plus r=1 R=2
    onearm plus n=8
    arms k1=2 k2=2 r=1 R=8 [half]
    halfplane E2 n=16            (kinds E2, E2*, E3, E3*)
    fourarm v=0,0 n=8
    pivotal v=0,0 : crossing h plus rect=-1..1x-1..1

Arms are counted through the cyclic word of crossing clusters met along the
inner square (one letter per cluster joining the inner and the outer
boundary); distinct crossing clusters stand in for disjoint paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .clusters import PLUS, color_code
from .errors import InvalidGeometryError, InvalidSpecError
from .gibbs import SpinConfig
from .lattice import Annulus, Rect, Site, SiteSet, annulus_sites, box_sites

HORIZONTAL = "h"
VERTICAL = "v"
HALF_KINDS = ("E2", "E2*", "E3", "E3*")


def _color_word(c: int) -> str:
    return "plus" if c == PLUS else "minus"


# ------------------------------------------------------------------- specs ---

@dataclass(frozen=True)
class ArmSpec:
    k1: int
    k2: int
    r: int
    R: int
    half_plane: bool = False

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0 or self.k1 + self.k2 < 1:
            raise InvalidSpecError("arm counts need k1, k2 >= 0 and k1 + k2 >= 1")
        if not 1 <= self.r < self.R:
            raise InvalidGeometryError("arm annulus needs 1 <= r < R")


class EventSpec:
    """Base class; subclasses provide ``encode``, ``support`` and ``to_text``."""

    def encode(self) -> np.ndarray:
        raise NotImplementedError

    def support(self) -> Optional[SiteSet]:
        raise NotImplementedError

    def to_text(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True)
class Always(EventSpec):
    def encode(self):
        return np.array([K.K_ALWAYS], dtype=np.int64)

    def support(self):
        return None

    def to_text(self):
        return "always"


@dataclass(frozen=True)
class SpinAt(EventSpec):
    site: Site = Site(0, 0)
    value: int = 1

    def encode(self):
        return np.array([K.K_SPIN, self.site[0], self.site[1], self.value], dtype=np.int64)

    def support(self):
        return SiteSet.from_sites([self.site])

    def to_text(self):
        return f"spin {self.site[0]},{self.site[1]} {'+' if self.value == 1 else '-'}"


@dataclass(frozen=True)
class Crossing(EventSpec):
    rect: Rect
    orientation: str = HORIZONTAL
    color: int = PLUS

    def __post_init__(self):
        if self.orientation not in (HORIZONTAL, VERTICAL):
            raise InvalidSpecError(f"orientation must be 'h' or 'v', got {self.orientation!r}")
        object.__setattr__(self, "color", color_code(self.color))

    def encode(self):
        r = self.rect
        return np.array([K.K_CROSSING, r.x_lo, r.x_hi, r.y_lo, r.y_hi,
                         1 if self.orientation == HORIZONTAL else 0, self.color], dtype=np.int64)

    def support(self):
        return self.rect.sites()

    def to_text(self):
        r = self.rect
        return (f"crossing {self.orientation} {_color_word(self.color)} "
                f"rect={r.x_lo}..{r.x_hi}x{r.y_lo}..{r.y_hi}")


@dataclass(frozen=True)
class Circuit(EventSpec):
    annulus: Annulus
    color: int = PLUS

    def __post_init__(self):
        object.__setattr__(self, "color", color_code(self.color))

    def encode(self):
        a = self.annulus
        return np.array([K.K_CIRCUIT, 0, 0, a.inner, a.outer, self.color], dtype=np.int64)

    def support(self):
        return self.annulus.sites()

    def to_text(self):
        return f"circuit {_color_word(self.color)} r={self.annulus.inner} R={self.annulus.outer}"


@dataclass(frozen=True)
class OneArm(EventSpec):
    n: int
    color: int = PLUS

    def __post_init__(self):
        if self.n < 1:
            raise InvalidGeometryError("one-arm radius must be >= 1")
        object.__setattr__(self, "color", color_code(self.color))

    def encode(self):
        return np.array([K.K_ONEARM, 0, 0, self.n, self.color], dtype=np.int64)

    def support(self):
        return box_sites(self.n)

    def to_text(self):
        return f"onearm {_color_word(self.color)} n={self.n}"


@dataclass(frozen=True)
class Arms(EventSpec):
    spec: ArmSpec

    def encode(self):
        s = self.spec
        return np.array([K.K_ARMS, s.k1, s.k2, s.r, s.R, int(s.half_plane)], dtype=np.int64)

    def support(self):
        sites = annulus_sites(self.spec.r, self.spec.R)
        if self.spec.half_plane:
            sites = sites & Rect(1, self.spec.R, -self.spec.R, self.spec.R).sites()
        return sites

    def to_text(self):
        s = self.spec
        return f"arms k1={s.k1} k2={s.k2} r={s.r} R={s.R}" + (" half" if s.half_plane else "")


@dataclass(frozen=True)
class HalfPlane(EventSpec):
    n: int
    kind: str = "E2"

    def __post_init__(self):
        if self.kind not in HALF_KINDS:
            raise InvalidSpecError(f"half-plane kind must be one of {HALF_KINDS}")
        if self.n < 1:
            raise InvalidGeometryError("half-plane events need n >= 1")

    def encode(self):
        return np.array([K.K_HALFPLANE, self.n, HALF_KINDS.index(self.kind)], dtype=np.int64)

    def support(self):
        return box_sites(self.n)

    def to_text(self):
        return f"halfplane {self.kind} n={self.n}"


@dataclass(frozen=True)
class FourArm(EventSpec):
    site: Site
    n: int

    def encode(self):
        return np.array([K.K_FOURARM, self.site[0], self.site[1], self.n], dtype=np.int64)

    def support(self):
        return box_sites(self.n)

    def to_text(self):
        return f"fourarm v={self.site[0]},{self.site[1]} n={self.n}"


@dataclass(frozen=True)
class Pivotal(EventSpec):
    site: Site
    inner: EventSpec

    def __post_init__(self):
        if isinstance(self.inner, Pivotal):
            raise InvalidSpecError("pivotality can only wrap a non-pivotal event")

    def encode(self):
        head = np.array([K.K_PIVOTAL, self.site[0], self.site[1]], dtype=np.int64)
        return np.concatenate([head, self.inner.encode()])

    def support(self):
        own = SiteSet.from_sites([self.site])
        inner = self.inner.support()
        return own if inner is None else own | inner

    def to_text(self):
        return f"pivotal v={self.site[0]},{self.site[1]} : {self.inner.to_text()}"


# ----------------------------------------------------------------- parsing ---

def _kv(tokens):
    out = {}
    flags = []
    for t in tokens:
        if "=" in t:
            k, v = t.split("=", 1)
            out[k] = v
        else:
            flags.append(t)
    return out, flags


def _site(text: str) -> Site:
    try:
        a, b = text.split(",")
        return Site(int(a), int(b))
    except ValueError:
        raise InvalidSpecError(f"bad site {text!r}") from None


def _range(text: str):
    lo, hi = text.split("..")
    return int(lo), int(hi)


def parse_event(text: str) -> EventSpec:
    """Inverse of ``EventSpec.to_text``."""
    text = text.strip()
    if " : " in text:
        head, inner = text.split(" : ", 1)
        kv, _ = _kv(head.split()[1:])
        if head.split()[0] != "pivotal" or "v" not in kv:
            raise InvalidSpecError(f"bad pivotal event {text!r}")
        return Pivotal(_site(kv["v"]), parse_event(inner))
    tokens = text.split()
    if not tokens:
        raise InvalidSpecError("empty event")
    kind, rest = tokens[0], tokens[1:]
    kv, flags = _kv(rest)
    try:
        if kind == "always":
            return Always()
        if kind == "spin":
            return SpinAt(_site(flags[0]), 1 if flags[1] == "+" else -1)
        if kind == "crossing":
            xs, ys = kv["rect"].split("x")
            x0, x1 = _range(xs)
            y0, y1 = _range(ys)
            return Crossing(Rect(x0, x1, y0, y1), flags[0], flags[1])
        if kind == "circuit":
            return Circuit(Annulus(int(kv["r"]), int(kv["R"])), flags[0])
        if kind == "onearm":
            return OneArm(int(kv["n"]), flags[0])
        if kind == "arms":
            return Arms(ArmSpec(int(kv["k1"]), int(kv["k2"]), int(kv["r"]), int(kv["R"]),
                                "half" in flags))
        if kind == "halfplane":
            return HalfPlane(int(kv["n"]), flags[0])
        if kind == "fourarm":
            return FourArm(_site(kv["v"]), int(kv["n"]))
    except (KeyError, IndexError, ValueError) as exc:
        if isinstance(exc, (InvalidSpecError, InvalidGeometryError)):
            raise
        raise InvalidSpecError(f"bad event {text!r}: {exc}") from None
    raise InvalidSpecError(f"unknown event kind {kind!r}")


# --------------------------------------------------------------- detectors ---

class _Work:
    """Scratch arrays for one kernel call on ``config``."""

    def __init__(self, config: SpinConfig):
        self.spins = np.array(config.spins, dtype=np.int8)
        self.visited = np.zeros(self.spins.shape, dtype=np.uint8)
        self.queue = np.empty(self.spins.size, dtype=np.int64)
        self.sheet = np.zeros(self.spins.shape, dtype=np.int64)
        self.xo = config.rect.x_lo
        self.yo = config.rect.y_lo


def check_region(region: SiteSet, spec: EventSpec):
    sup = spec.support()
    if sup is None:
        return
    if not region.rect.contains(sup.rect) or not sup.issubset(region):
        raise InvalidGeometryError(f"event `{spec.to_text()}` reads sites outside the region")


def check_support(config: SpinConfig, spec: EventSpec):
    check_region(config.region, spec)


def evaluate(config: SpinConfig, spec: EventSpec) -> bool:
    check_support(config, spec)
    w = _Work(config)
    return bool(K.eval_event(spec.encode(), w.spins, np.uint64(0), 0.0, w.xo, w.yo,
                             w.visited, w.queue, w.sheet))


def has_crossing(config: SpinConfig, rect: Rect, orientation: str = HORIZONTAL, color=PLUS) -> bool:
    return evaluate(config, Crossing(rect, orientation, color))


def has_circuit(config: SpinConfig, annulus: Annulus, color=PLUS) -> bool:
    """A ``color`` circuit inside the annulus surrounding its hole."""
    return evaluate(config, Circuit(annulus, color))


def annulus_crossing(config: SpinConfig, annulus: Annulus, color=PLUS) -> bool:
    """A ``color`` path inside the annulus from |x|_inf = r to |x|_inf = R."""
    from .clusters import connected

    r, R = annulus.inner, annulus.outer
    inner = SiteSet.from_sites([s for s in annulus.sites() if s.linf() == r])
    outer = SiteSet.from_sites([s for s in annulus.sites() if s.linf() == R])
    return connected(config, inner, outer, annulus.sites(), color)


def one_arm(config: SpinConfig, n: int, color=PLUS) -> bool:
    return evaluate(config, OneArm(n, color))


def arm_signature(config: SpinConfig, r: int, R: int, half_plane: bool = False) -> list[str]:
    """Colours of the crossing clusters of B(r, R) in order of first contact.

    The walk starts at (r, 0) and runs counterclockwise; with ``half_plane``
    it covers the arc x1 >= 1 from bottom to top.
    """
    spec = Arms(ArmSpec(1, 0, r, R, half_plane))
    check_support(config, spec)
    w = _Work(config)
    word = K.arm_word(w.spins, np.uint64(0), 0.0, w.xo, w.yo, -w.yo, -w.xo, r, R, half_plane,
                      w.visited, w.queue)
    return ["+" if c == 1 else "-*" for c in word]


def has_arm_event(config: SpinConfig, spec: ArmSpec) -> bool:
    return evaluate(config, Arms(spec))


def is_pivotal(config: SpinConfig, v, event: EventSpec) -> bool:
    """Does flipping the spin at v change the indicator of ``event``?"""
    return evaluate(config, Pivotal(Site(*v), event))


def four_arm_at(config: SpinConfig, v, n: int, method: str = "direct") -> bool:
    """Pivotality of v for the horizontal (+)-crossing of S(n).

    ``direct`` evaluates the crossing with v plus and v minus; ``arms`` uses
    the increasing/decreasing decomposition (left-right (+)-arms from the
    neighbours of v, top-bottom (-*)-arms through v).
    """
    v = Site(*v)
    spec = FourArm(v, n)
    check_support(config, spec)
    if v not in box_sites(n):
        raise InvalidGeometryError("v must lie in S(n)")
    if method == "direct":
        return evaluate(config, spec)
    if method != "arms":
        raise ValueError(f"unknown method {method!r}")
    w = _Work(config)
    return bool(K.four_arm_split(w.spins, np.uint64(0), 0.0, w.xo, w.yo, v[0], v[1], n,
                                 w.visited, w.queue))


def halfplane_boundary_event(config: SpinConfig, n: int, kind: str = "E2") -> bool:
    """Arm events anchored at the top centre (0, n) of S(n).

    Paths end on the inner boundary of S(n) minus its top side.  For the
    three-arm kinds the top centre itself is removed from the paths so the
    two same-colour arms are disjoint.
    """
    return evaluate(config, HalfPlane(n, kind))


# --------------------------------------------------------- lowest crossing ---

@dataclass(frozen=True)
class LowestCrossing:
    path: tuple  # Sites from the left side to the right side

    def sites(self) -> SiteSet:
        return SiteSet.from_sites(self.path)

    def central_highest_point(self):
        """(site, unique) for the highest site v of the path with v +- (1, 0) on it.

        Returns (None, False) when the top level has no such site; ``unique``
        is False when several sites qualify.
        """
        on = set(self.path)
        top = max(s.x2 for s in self.path)
        cands = [s for s in self.path if s.x2 == top
                 and Site(s.x1 - 1, s.x2) in on and Site(s.x1 + 1, s.x2) in on]
        if not cands:
            return None, False
        return cands[0], len(cands) == 1


_HEADINGS = ((1, 0), (0, -1), (-1, 0), (0, 1))  # east, south, west, north (clockwise)


def lowest_crossing(config: SpinConfig, rect: Rect) -> Optional[LowestCrossing]:
    """Lowest horizontal (+)-crossing of ``rect``, or None without a crossing.

    Traces the lower contour of the lowest crossing cluster with a
    right-hand wall walk from its lowest left-side site and loop-erases the
    trace.
    """
    from .clusters import label_clusters

    if not config.rect.contains(rect) or not rect.sites().issubset(config.region):
        raise InvalidGeometryError(f"{rect} is not inside the region")
    sub = SpinConfig(rect.sites(), config.spins[rect.y_lo - config.rect.y_lo:rect.y_hi - config.rect.y_lo + 1,
                                                 rect.x_lo - config.rect.x_lo:rect.x_hi - config.rect.x_lo + 1].copy())
    lab = label_clusters(sub, PLUS)
    crossing_ids = set(lab.ids[lab.touches[:, 0] & lab.touches[:, 1]].tolist())
    if not crossing_ids:
        return None
    start = None
    for y in range(rect.y_lo, rect.y_hi + 1):
        if lab.label((rect.x_lo, y)) in crossing_ids:
            start = Site(rect.x_lo, y)
            break

    def plus(x, y):
        return rect.x_lo <= x <= rect.x_hi and rect.y_lo <= y <= rect.y_hi and sub.spin((x, y)) == 1

    path = [start]
    index = {start: 0}
    cur, heading = start, 0
    limit = 16 * rect.nx * rect.ny + 16
    for _ in range(limit):
        if cur.x1 == rect.x_hi:
            return LowestCrossing(tuple(path))
        for turn in (1, 0, -1, 2):  # right, straight, left, back
            d = (heading + turn) % 4
            nxt = Site(cur.x1 + _HEADINGS[d][0], cur.x2 + _HEADINGS[d][1])
            if plus(*nxt):
                heading = d
                break
        else:
            nxt = cur  # isolated site: only possible when rect is one column wide
        if nxt in index:
            k = index[nxt]
            for s in path[k + 1:]:
                del index[s]
            del path[k + 1:]
        else:
            index[nxt] = len(path)
            path.append(nxt)
        cur = nxt
    raise RuntimeError("wall walk did not reach the right side")
