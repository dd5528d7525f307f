"""Numba kernels shared by the detectors, samplers and the enumeration oracle.

Arrays are indexed ``spins[i, j]`` with ``i = x2 - y_lo`` (row, grows upward)
and ``j = x1 - x_lo`` (column).  A spin value of 0 means "not yet drawn": in
lazy Bernoulli mode the first read of such a site draws it from the
counter-based site hash, so a lazily explored field is identical to the
fully materialized one for the same sample key.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_OFF = np.int64(2147483648)
_TWO53 = 1.0 / 9007199254740992.0
_PHI = 0.2360679774997897  # sqrt(5) - 2, slope of the winding cut

LEFT = 1
RIGHT = 2
BOTTOM = 4
TOP = 8
SIDES_NOT_TOP = 16

K_ALWAYS = 0
K_SPIN = 1
K_CROSSING = 2
K_CIRCUIT = 3
K_ONEARM = 4
K_ARMS = 5
K_HALFPLANE = 6
K_FOURARM = 7
K_PIVOTAL = 8


# ---------------------------------------------------------------- hashing ---

@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def sample_key(seed, index):
    """Per-sample key: splitmix64 finalizer over (seed, index)."""
    s = mix64(np.uint64(seed) + _GOLDEN)
    return mix64(s ^ (np.uint64(index) * _GOLDEN + _M1))


@njit(cache=True, inline="always")
def site_uniform(key, x, y):
    packed = (np.uint64(x + _OFF) << np.uint64(32)) | np.uint64(y + _OFF)
    z = mix64(key ^ mix64(packed))
    return np.float64(z >> np.uint64(11)) * _TWO53


@njit(cache=True, inline="always")
def stream_next(state):
    """splitmix64 stream; ``state`` is a length-1 uint64 array."""
    state[0] = state[0] + _GOLDEN
    return np.float64(mix64(state[0]) >> np.uint64(11)) * _TWO53


@njit(cache=True)
def materialize(key, p, x_lo, y_lo, ny, nx):
    out = np.empty((ny, nx), dtype=np.int8)
    for i in range(ny):
        for j in range(nx):
            out[i, j] = 1 if site_uniform(key, x_lo + j, y_lo + i) < p else -1
    return out


@njit(cache=True, inline="always")
def get_spin(spins, i, j, key, p, xo, yo):
    s = spins[i, j]
    if s == 0:
        s = 1 if site_uniform(key, xo + j, yo + i) < p else -1
        spins[i, j] = s
    return s


# ------------------------------------------------------------ flood fill ---

@njit(cache=True, inline="always")
def _allowed(i, j, i0, i1, j0, j1, ci, cj, hole, mask, excl, ncols):
    if i < i0 or i > i1 or j < j0 or j > j1:
        return False
    if hole > 0 and max(abs(i - ci), abs(j - cj)) < hole:
        return False
    if mask.shape[0] > 0 and mask[i, j] == 0:
        return False
    if i * ncols + j == excl:
        return False
    return True


@njit(cache=True, inline="always")
def _touch_bits(i, j, i0, i1, j0, j1):
    t = 0
    if j == j0:
        t |= LEFT
    if j == j1:
        t |= RIGHT
    if i == i0:
        t |= BOTTOM
    if i == i1:
        t |= TOP
    if i != i1 and (t & (LEFT | RIGHT | BOTTOM)) != 0:
        t |= SIDES_NOT_TOP
    return t


_DI = np.array([0, 0, 1, -1, 1, 1, -1, -1], dtype=np.int64)
_DJ = np.array([1, -1, 0, 0, 1, -1, 1, -1], dtype=np.int64)


@njit(cache=True)
def flood(spins, key, p, xo, yo, i0, i1, j0, j1, ci, cj, hole, mask, excl,
          seeds, color, visited, queue, qstart, tmask, stop_any, stop_all):
    """Breadth-first exploration of the ``color`` clusters containing ``seeds``.

    Plus (+1) uses the 4 axis neighbours, minus (-1) all 8.  Only sites
    passing ``_allowed`` are entered.  Returns ``(qend, touch, hit)``; the
    explored sites are ``queue[qstart:qend]`` and stay marked in ``visited``
    until the caller clears them.  ``hit`` reports an early exit triggered by
    ``stop_any`` / ``stop_all`` bits or a nonzero ``tmask`` entry.
    """
    ncols = spins.shape[1]
    nnb = 4 if color == 1 else 8
    use_tmask = tmask.shape[0] > 0
    head = qstart
    tail = qstart
    touch = 0
    for s in range(seeds.shape[0]):
        f = seeds[s]
        i = f // ncols
        j = f - i * ncols
        if f < 0 or f >= spins.size:
            continue
        if not _allowed(i, j, i0, i1, j0, j1, ci, cj, hole, mask, excl, ncols) or visited[i, j]:
            continue
        if get_spin(spins, i, j, key, p, xo, yo) != color:
            continue
        visited[i, j] = 1
        queue[tail] = f
        tail += 1
    while head < tail:
        f = queue[head]
        head += 1
        i = f // ncols
        j = f - i * ncols
        touch |= _touch_bits(i, j, i0, i1, j0, j1)
        if (stop_any != 0 and (touch & stop_any) != 0) or \
           (stop_all != 0 and (touch & stop_all) == stop_all) or \
           (use_tmask and tmask[i, j] != 0):
            return tail, touch, True
        for d in range(nnb):
            a = i + _DI[d]
            b = j + _DJ[d]
            if not _allowed(a, b, i0, i1, j0, j1, ci, cj, hole, mask, excl, ncols):
                continue
            if visited[a, b]:
                continue
            if get_spin(spins, a, b, key, p, xo, yo) != color:
                continue
            visited[a, b] = 1
            queue[tail] = a * ncols + b
            tail += 1
    return tail, touch, False


@njit(cache=True)
def clear(visited, queue, qstart, qend):
    ncols = visited.shape[1]
    for k in range(qstart, qend):
        f = queue[k]
        i = f // ncols
        visited[i, f - i * ncols] = 0


_NOMASK = np.zeros((0, 0), dtype=np.uint8)


# --------------------------------------------------------------- winding ---

@njit(cache=True, inline="always")
def _cut(ay, ax, by, bx):
    """Signed crossing of segment a->b with the ray t*(1, -phi), t > 0."""
    ca = ay + _PHI * ax
    cb = by + _PHI * bx
    if ca * cb >= 0.0:
        return 0
    s = ca / (ca - cb)
    px = ax + s * (bx - ax)
    py = ay + s * (by - ay)
    if px - _PHI * py <= 0.0:
        return 0
    return 1 if ca < 0.0 else -1


@njit(cache=True)
def winds(spins, key, p, xo, yo, i0, i1, j0, j1, ci, cj, hole, color,
          visited, queue, sheet):
    """True iff some ``color`` cluster of the region winds around (ci, cj).

    Each cluster is explored with a sheet index on the universal cover cut
    along an irrational ray; a neighbour reached with an inconsistent sheet
    closes a loop of nonzero winding number.
    """
    ncols = spins.shape[1]
    nnb = 4 if color == 1 else 8
    tail = 0
    found = False
    for si in range(i0, i1 + 1):
        if found:
            break
        for sj in range(j0, j1 + 1):
            if found:
                break
            if visited[si, sj] or not _allowed(si, sj, i0, i1, j0, j1, ci, cj, hole, _NOMASK, -1, ncols):
                continue
            if get_spin(spins, si, sj, key, p, xo, yo) != color:
                continue
            visited[si, sj] = 1
            sheet[si, sj] = 0
            head = tail
            queue[tail] = si * ncols + sj
            tail += 1
            while head < tail and not found:
                f = queue[head]
                head += 1
                i = f // ncols
                j = f - i * ncols
                for d in range(nnb):
                    a = i + _DI[d]
                    b = j + _DJ[d]
                    if not _allowed(a, b, i0, i1, j0, j1, ci, cj, hole, _NOMASK, -1, ncols):
                        continue
                    if get_spin(spins, a, b, key, p, xo, yo) != color:
                        continue
                    w = sheet[i, j] + _cut(i - ci, j - cj, a - ci, b - cj)
                    if visited[a, b]:
                        if sheet[a, b] != w:
                            found = True
                            break
                        continue
                    visited[a, b] = 1
                    sheet[a, b] = w
                    queue[tail] = a * ncols + b
                    tail += 1
    clear(visited, queue, 0, tail)
    return found


# ------------------------------------------------------------------ arms ---

@njit(cache=True)
def inner_walk(ci, cj, r, half):
    """Sites of the ring at sup-distance r, counterclockwise from (r, 0).

    With ``half`` only the arc x1 >= 1 is returned, walked bottom to top.
    """
    out = np.empty((8 * r, 2), dtype=np.int64)
    k = 0
    if half:
        for x in range(1, r):
            out[k, 0] = ci - r
            out[k, 1] = cj + x
            k += 1
        for y in range(-r, r + 1):
            out[k, 0] = ci + y
            out[k, 1] = cj + r
            k += 1
        for x in range(r - 1, 0, -1):
            out[k, 0] = ci + r
            out[k, 1] = cj + x
            k += 1
        return out[:k]
    for y in range(0, r + 1):
        out[k, 0] = ci + y
        out[k, 1] = cj + r
        k += 1
    for x in range(r - 1, -r - 1, -1):
        out[k, 0] = ci + r
        out[k, 1] = cj + x
        k += 1
    for y in range(r - 1, -r - 1, -1):
        out[k, 0] = ci + y
        out[k, 1] = cj - r
        k += 1
    for x in range(-r + 1, r + 1):
        out[k, 0] = ci - r
        out[k, 1] = cj + x
        k += 1
    for y in range(-r + 1, 0):
        out[k, 0] = ci + y
        out[k, 1] = cj + r
        k += 1
    return out[:k]


@njit(cache=True)
def arm_word(spins, key, p, xo, yo, ci, cj, r, R, half, visited, queue):
    """Cyclic (or, for ``half``, linear) word of crossing-cluster colours."""
    ncols = spins.shape[1]
    i0 = ci - R
    i1 = ci + R
    j0 = cj + 1 if half else cj - R
    j1 = cj + R
    walk = inner_walk(ci, cj, r, half)
    word = np.empty(walk.shape[0], dtype=np.int8)
    nw = 0
    qend = 0
    seed = np.empty(1, dtype=np.int64)
    for k in range(walk.shape[0]):
        i = walk[k, 0]
        j = walk[k, 1]
        if visited[i, j]:
            continue
        c = get_spin(spins, i, j, key, p, xo, yo)
        seed[0] = i * ncols + j
        qnew, touch, hit = flood(spins, key, p, xo, yo, i0, i1, j0, j1, ci, cj, r,
                                 _NOMASK, -1, seed, c, visited, queue, qend,
                                 _NOMASK, 0, 0)
        # a cluster touching the outer square at |x|_inf = R crosses
        crossing = False
        for q in range(qend, qnew):
            f = queue[q]
            a = f // ncols
            b = f - a * ncols
            if max(abs(a - ci), abs(b - cj)) == R:
                crossing = True
                break
        qend = qnew
        if crossing:
            word[nw] = c
            nw += 1
    clear(visited, queue, 0, qend)
    return word[:nw]


@njit(cache=True)
def arms_ok(word, k1, k2, half):
    """Selection test: k1 plus letters, k2 minus letters, minus separated by plus.

    In the full annulus two distinct (+) crossing clusters always have a
    (-*) crossing in each sector between them (and vice versa), so the
    separation follows from the counts; the first-contact order along the
    inner ring is not used because clusters may touch the ring across the
    corners of the hole.  The half annulus is simply connected and its word
    is a faithful linear order.
    """
    n = word.shape[0]
    P = 0
    M = 0
    for k in range(n):
        if word[k] == 1:
            P += 1
        else:
            M += 1
    if P < k1 or M < k2:
        return False
    if k2 <= 1:
        return True
    if not half:
        return k1 >= k2
    runs = 0
    for k in range(n):
        if word[k] == -1 and (k == 0 or word[k - 1] == 1):
            runs += 1
    return runs >= k2 and k1 >= k2 - 1


# ---------------------------------------------------------------- events ---

@njit(cache=True)
def _crossing(spins, key, p, xo, yo, x0, x1, y0, y1, horizontal, color, visited, queue):
    ncols = spins.shape[1]
    i0 = y0 - yo
    i1 = y1 - yo
    j0 = x0 - xo
    j1 = x1 - xo
    if horizontal:
        seeds = np.empty(i1 - i0 + 1, dtype=np.int64)
        for k in range(i1 - i0 + 1):
            seeds[k] = (i0 + k) * ncols + j0
        stop = RIGHT
    else:
        seeds = np.empty(j1 - j0 + 1, dtype=np.int64)
        for k in range(j1 - j0 + 1):
            seeds[k] = i0 * ncols + j0 + k
        stop = TOP
    qend, touch, hit = flood(spins, key, p, xo, yo, i0, i1, j0, j1, 0, 0, 0,
                             _NOMASK, -1, seeds, color, visited, queue, 0,
                             _NOMASK, stop, 0)
    clear(visited, queue, 0, qend)
    return hit


@njit(cache=True)
def _one_arm(spins, key, p, xo, yo, cx, cy, n, color, visited, queue):
    ncols = spins.shape[1]
    ci = cy - yo
    cj = cx - xo
    seeds = np.empty(1, dtype=np.int64)
    seeds[0] = ci * ncols + cj
    qend, touch, hit = flood(spins, key, p, xo, yo, ci - n, ci + n, cj - n, cj + n,
                             0, 0, 0, _NOMASK, -1, seeds, color, visited, queue, 0,
                             _NOMASK, LEFT | RIGHT | BOTTOM | TOP, 0)
    clear(visited, queue, 0, qend)
    return hit


@njit(cache=True)
def _reach_sides(spins, key, p, xo, yo, ci, cj, n, si, sj, color, excl, visited, queue):
    """Path of ``color`` from local (si, sj) to the non-top sides of S(n)."""
    ncols = spins.shape[1]
    seeds = np.empty(1, dtype=np.int64)
    seeds[0] = si * ncols + sj
    qend, touch, hit = flood(spins, key, p, xo, yo, ci - n, ci + n, cj - n, cj + n,
                             0, 0, 0, _NOMASK, excl, seeds, color, visited, queue, 0,
                             _NOMASK, SIDES_NOT_TOP, 0)
    clear(visited, queue, 0, qend)
    return hit


@njit(cache=True)
def _halfplane(spins, key, p, xo, yo, n, kind, visited, queue):
    ncols = spins.shape[1]
    ci = -yo
    cj = -xo
    ti = ci + n
    c = 1
    if kind == 1 or kind == 3:
        c = -1
    if kind <= 1:
        # E2: opposite colour from the top centre, c from its left neighbour
        if get_spin(spins, ti, cj, key, p, xo, yo) != -c:
            return False
        if get_spin(spins, ti, cj - 1, key, p, xo, yo) != c:
            return False
        if not _reach_sides(spins, key, p, xo, yo, ci, cj, n, ti, cj, -c, -1, visited, queue):
            return False
        return _reach_sides(spins, key, p, xo, yo, ci, cj, n, ti, cj - 1, c, -1, visited, queue)
    # E3: top centre and both neighbours colour c, opposite colour below it
    if get_spin(spins, ti, cj, key, p, xo, yo) != c:
        return False
    if get_spin(spins, ti, cj - 1, key, p, xo, yo) != c:
        return False
    if get_spin(spins, ti, cj + 1, key, p, xo, yo) != c:
        return False
    if get_spin(spins, ti - 1, cj, key, p, xo, yo) != -c:
        return False
    excl = ti * ncols + cj
    if not _reach_sides(spins, key, p, xo, yo, ci, cj, n, ti, cj - 1, c, excl, visited, queue):
        return False
    if not _reach_sides(spins, key, p, xo, yo, ci, cj, n, ti, cj + 1, c, excl, visited, queue):
        return False
    return _reach_sides(spins, key, p, xo, yo, ci, cj, n, ti - 1, cj, -c, excl, visited, queue)


@njit(cache=True)
def four_arm_split(spins, key, p, xo, yo, vx, vy, n, visited, queue):
    """Pivotality of v for the horizontal (+)-crossing of S(n), via arms.

    Increasing part: (+)-clusters of v's axis neighbours (v removed) reach the
    left and the right side.  Decreasing part: with v set to minus, the
    (-*)-cluster of v reaches the top and the bottom.
    """
    ncols = spins.shape[1]
    ci = -yo
    cj = -xo
    vi = vy - yo
    vj = vx - xo
    i0 = ci - n
    i1 = ci + n
    j0 = cj - n
    j1 = cj + n
    need = LEFT | RIGHT
    if vj == j0:
        need &= ~LEFT
    if vj == j1:
        need &= ~RIGHT
    v = vi * ncols + vj
    if need != 0:
        seeds = np.full(4, -1, dtype=np.int64)
        if vj + 1 < ncols:
            seeds[0] = v + 1
        if vj > 0:
            seeds[1] = v - 1
        if vi + 1 < spins.shape[0]:
            seeds[2] = v + ncols
        if vi > 0:
            seeds[3] = v - ncols
        qend, touch, hit = flood(spins, key, p, xo, yo, i0, i1, j0, j1, 0, 0, 0,
                                 _NOMASK, v, seeds, 1, visited, queue, 0,
                                 _NOMASK, 0, need)
        clear(visited, queue, 0, qend)
        if not hit:
            return False
    s = get_spin(spins, vi, vj, key, p, xo, yo)
    spins[vi, vj] = -1
    seeds1 = np.empty(1, dtype=np.int64)
    seeds1[0] = v
    qend, touch, hit = flood(spins, key, p, xo, yo, i0, i1, j0, j1, 0, 0, 0,
                             _NOMASK, -1, seeds1, -1, visited, queue, 0,
                             _NOMASK, 0, TOP | BOTTOM)
    clear(visited, queue, 0, qend)
    spins[vi, vj] = s
    return hit


@njit(cache=True)
def eval_basic(prm, spins, key, p, xo, yo, visited, queue, sheet):
    code = prm[0]
    if code == K_ALWAYS:
        return True
    if code == K_SPIN:
        return get_spin(spins, prm[2] - yo, prm[1] - xo, key, p, xo, yo) == prm[3]
    if code == K_CROSSING:
        return _crossing(spins, key, p, xo, yo, prm[1], prm[2], prm[3], prm[4],
                         prm[5] == 1, prm[6], visited, queue)
    if code == K_CIRCUIT:
        ci = prm[2] - yo
        cj = prm[1] - xo
        R = prm[4]
        return winds(spins, key, p, xo, yo, ci - R, ci + R, cj - R, cj + R, ci, cj,
                     prm[3], prm[5], visited, queue, sheet)
    if code == K_ONEARM:
        return _one_arm(spins, key, p, xo, yo, prm[1], prm[2], prm[3], prm[4], visited, queue)
    if code == K_ARMS:
        word = arm_word(spins, key, p, xo, yo, -yo, -xo, prm[3], prm[4], prm[5] == 1,
                        visited, queue)
        return arms_ok(word, prm[1], prm[2], prm[5] == 1)
    if code == K_HALFPLANE:
        return _halfplane(spins, key, p, xo, yo, prm[1], prm[2], visited, queue)
    if code == K_FOURARM:
        return _pivotal_crossing(spins, key, p, xo, yo, prm[1], prm[2], prm[3], visited, queue)
    return False


@njit(cache=True)
def _pivotal_crossing(spins, key, p, xo, yo, vx, vy, n, visited, queue):
    vi = vy - yo
    vj = vx - xo
    s = get_spin(spins, vi, vj, key, p, xo, yo)
    spins[vi, vj] = 1
    up = _crossing(spins, key, p, xo, yo, -n, n, -n, n, True, 1, visited, queue)
    spins[vi, vj] = -1
    down = _crossing(spins, key, p, xo, yo, -n, n, -n, n, True, 1, visited, queue)
    spins[vi, vj] = s
    return up != down


@njit(cache=True)
def eval_event(prm, spins, key, p, xo, yo, visited, queue, sheet):
    """Indicator of an encoded event; one level of pivotality is unwrapped."""
    if prm[0] != K_PIVOTAL:
        return eval_basic(prm, spins, key, p, xo, yo, visited, queue, sheet)
    vi = prm[2] - yo
    vj = prm[1] - xo
    inner = prm[3:]
    s = get_spin(spins, vi, vj, key, p, xo, yo)
    a = eval_basic(inner, spins, key, p, xo, yo, visited, queue, sheet)
    spins[vi, vj] = -s
    b = eval_basic(inner, spins, key, p, xo, yo, visited, queue, sheet)
    spins[vi, vj] = s
    return a != b


@njit(cache=True)
def bernoulli_hits(prm, seed, start, stop, p, x_lo, y_lo, ny, nx):
    """Number of samples in [start, stop) where the event holds, lazy fields."""
    spins = np.zeros((ny, nx), dtype=np.int8)
    visited = np.zeros((ny, nx), dtype=np.uint8)
    queue = np.empty(ny * nx, dtype=np.int64)
    sheet = np.zeros((ny, nx), dtype=np.int64)
    hits = 0
    for idx in range(start, stop):
        spins[:, :] = 0
        key = sample_key(seed, idx)
        if eval_event(prm, spins, key, p, x_lo, y_lo, visited, queue, sheet):
            hits += 1
    return hits


@njit(cache=True)
def _zero_window(spins, ci, cj, r):
    i0 = max(ci - r, 0)
    i1 = min(ci + r, spins.shape[0] - 1)
    j0 = max(cj - r, 0)
    j1 = min(cj + r, spins.shape[1] - 1)
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            spins[i, j] = 0


@njit(cache=True)
def four_arm_origin(spins, key, p, n, visited, queue):
    """Omega(O, S(n)) on an array centred at O, with nested arm screening.

    Pivotality forces two (+) and two (-*) crossing clusters, alternating,
    in every annulus B(1, r) with r <= n, so dyadic r are screened first.
    Returns (indicator, radius of the window that may hold drawn spins).
    """
    c = (spins.shape[0] - 1) // 2
    r = 4
    while r < n:
        word = arm_word(spins, key, p, -c, -c, c, c, 1, r, False, visited, queue)
        if not arms_ok(word, 2, 2, False):
            return False, r
        r *= 2
    return four_arm_split(spins, key, p, -c, -c, 0, 0, n, visited, queue), c


@njit(cache=True)
def bernoulli_split_hits(seed, start, stop, p, n, vx, vy):
    """Like ``bernoulli_hits`` for the arm-split four-arm kernel at v in S(n).

    At v = O the nested arm screen of ``four_arm_origin`` is applied and
    only the explored window is reset between samples.
    """
    ny = 2 * n + 1
    spins = np.zeros((ny, ny), dtype=np.int8)
    visited = np.zeros((ny, ny), dtype=np.uint8)
    queue = np.empty(ny * ny, dtype=np.int64)
    hits = 0
    origin = vx == 0 and vy == 0
    for idx in range(start, stop):
        key = sample_key(seed, idx)
        if origin:
            ok, w = four_arm_origin(spins, key, p, n, visited, queue)
            _zero_window(spins, n, n, w + 1)
        else:
            ok = four_arm_split(spins, key, p, -n, -n, vx, vy, n, visited, queue)
            spins[:, :] = 0
        if ok:
            hits += 1
    return hits


# ------------------------------------------------------- origin clusters ---

@njit(cache=True)
def origin_cluster(spins, key, p, xo, yo, M, targets, visited, queue):
    """Full (+)-cluster of the origin inside S(M).

    Returns (size, radius, touches_boundary, sum of squared l1 norms,
    bitmask of ``targets`` rows contained in the cluster).
    """
    ncols = spins.shape[1]
    ci = -yo
    cj = -xo
    seeds = np.empty(1, dtype=np.int64)
    seeds[0] = ci * ncols + cj
    qend, touch, hit = flood(spins, key, p, xo, yo, ci - M, ci + M, cj - M, cj + M,
                             0, 0, 0, _NOMASK, -1, seeds, 1, visited, queue, 0,
                             _NOMASK, 0, 0)
    radius = -1
    sumsq = 0.0
    for q in range(qend):
        f = queue[q]
        i = f // ncols
        j = f - i * ncols
        a = abs(i - ci)
        b = abs(j - cj)
        if max(a, b) > radius:
            radius = max(a, b)
        sumsq += float((a + b) * (a + b))
    mask = 0
    for t in range(targets.shape[0]):
        if visited[targets[t, 1] - yo, targets[t, 0] - xo]:
            mask |= 1 << t
    clear(visited, queue, 0, qend)
    return qend, radius, (touch & (LEFT | RIGHT | BOTTOM | TOP)) != 0, sumsq, mask


@njit(cache=True)
def bernoulli_origin_clusters(seed, start, stop, p, M, targets, out):
    """Fill ``out[k] = (size, radius, touch, sumsq, mask)`` for sample start+k."""
    ny = 2 * M + 1
    spins = np.zeros((ny, ny), dtype=np.int8)
    visited = np.zeros((ny, ny), dtype=np.uint8)
    queue = np.empty(ny * ny, dtype=np.int64)
    for idx in range(start, stop):
        key = sample_key(seed, idx)
        size, radius, touch, sumsq, mask = origin_cluster(spins, key, p, -M, -M, M,
                                                          targets, visited, queue)
        _zero_window(spins, M, M, max(radius, 0) + 1)
        k = idx - start
        out[k, 0] = size
        out[k, 1] = radius
        out[k, 2] = 1.0 if touch else 0.0
        out[k, 3] = sumsq
        out[k, 4] = mask


@njit(cache=True)
def bernoulli_radii(seed, start, stop, p, M, out):
    """Origin (+)-cluster radius per sample, exploration stopped at radius M."""
    ny = 2 * M + 1
    spins = np.zeros((ny, ny), dtype=np.int8)
    visited = np.zeros((ny, ny), dtype=np.uint8)
    queue = np.empty(ny * ny, dtype=np.int64)
    seeds = np.empty(1, dtype=np.int64)
    seeds[0] = M * ny + M
    for idx in range(start, stop):
        key = sample_key(seed, idx)
        qend, touch, hit = flood(spins, key, p, -M, -M, 0, 2 * M, 0, 2 * M, 0, 0, 0,
                                 _NOMASK, -1, seeds, 1, visited, queue, 0,
                                 _NOMASK, LEFT | RIGHT | BOTTOM | TOP, 0)
        radius = -1
        for q in range(qend):
            f = queue[q]
            i = f // ny
            j = f - i * ny
            r = max(abs(i - M), abs(j - M))
            if r > radius:
                radius = r
        _zero_window(spins, M, M, max(radius, 0) + 1)
        if hit:
            radius = M
        out[idx - start] = radius
        clear(visited, queue, 0, qend)


# ---------------------------------------------------- Ising Monte Carlo ---

@njit(cache=True)
def heat_bath(spins, sites, nbr, bfield, beta, h, uniforms):
    """One sweep over ``sites`` (already in checkerboard order).

    ``nbr[k]`` lists the flat indices of the region neighbours of site k
    (-1 padded); ``bfield[k]`` is the boundary contribution.
    """
    flat = spins.ravel()
    for k in range(sites.shape[0]):
        f = 0.0
        for d in range(nbr.shape[1]):
            q = nbr[k, d]
            if q >= 0:
                f += flat[q]
        f += bfield[k] + h
        pplus = 1.0 / (1.0 + np.exp(-2.0 * beta * f))
        flat[sites[k]] = 1 if uniforms[k] < pplus else -1


@njit(cache=True)
def wolff_ghost(spins, sites, nbr, bfield, beta, h, state, nflips):
    """Wolff cluster moves with the field carried by a ghost spin.

    Works on the physical spins directly: a site x has a satisfied ghost bond
    when (h + bfield[x]) * spin(x) > 0.  If the ghost joins the cluster, every
    satisfied ghost bond is offered and the growth continues; flipping a
    cluster that contains the ghost is, physically, flipping its complement.
    """
    flat = spins.ravel()
    nsite = sites.shape[0]
    pos = -np.ones(flat.shape[0], dtype=np.int64)
    for k in range(nsite):
        pos[sites[k]] = k
    inc = np.zeros(nsite, dtype=np.uint8)
    stack = np.empty(nsite, dtype=np.int64)
    members = np.empty(nsite, dtype=np.int64)
    padd = 1.0 - np.exp(-2.0 * beta)
    for _ in range(nflips):
        k0 = int(stream_next(state) * nsite)
        if k0 >= nsite:
            k0 = nsite - 1
        top = 0
        nm = 0
        stack[top] = k0
        top += 1
        inc[k0] = 1
        members[nm] = k0
        nm += 1
        ghost = False
        while top > 0:
            top -= 1
            k = stack[top]
            sk = flat[sites[k]]
            for d in range(nbr.shape[1]):
                q = nbr[k, d]
                if q < 0:
                    continue
                kq = pos[q]
                if inc[kq] or flat[q] != sk:
                    continue
                if stream_next(state) < padd:
                    inc[kq] = 1
                    stack[top] = kq
                    top += 1
                    members[nm] = kq
                    nm += 1
            if not ghost:
                hx = h + bfield[k]
                if hx * sk > 0.0 and stream_next(state) < 1.0 - np.exp(-2.0 * beta * abs(hx)):
                    ghost = True
                    for y in range(nsite):
                        if inc[y]:
                            continue
                        hy = h + bfield[y]
                        if hy * flat[sites[y]] > 0.0 and \
                                stream_next(state) < 1.0 - np.exp(-2.0 * beta * abs(hy)):
                            inc[y] = 1
                            stack[top] = y
                            top += 1
                            members[nm] = y
                            nm += 1
        if ghost:
            for k in range(nsite):
                if inc[k] == 0:
                    flat[sites[k]] = -flat[sites[k]]
        else:
            for m in range(nm):
                flat[sites[members[m]]] = -flat[sites[members[m]]]
        for m in range(nm):
            inc[members[m]] = 0


# ------------------------------------------------------------ enumeration ---

@njit(cache=True)
def enumerate_energies(nbr, bfield, nsites):
    """Per-configuration (bond sum + boundary sum) and magnetization.

    Configuration index c has bit k set iff region site k is plus.  Walks the
    Gray code so every step flips one site.
    """
    total = 1 << nsites
    K = np.empty(total, dtype=np.int16)
    Mg = np.empty(total, dtype=np.int8)
    s = -np.ones(nsites, dtype=np.int64)
    k_val = 0
    for a in range(nsites):
        for d in range(nbr.shape[1]):
            q = nbr[a, d]
            if q > a:
                k_val += 1  # (-1)(-1)
            elif q == a:
                pass
        k_val -= bfield[a]
    m_val = -nsites
    K[0] = k_val
    Mg[0] = m_val
    g = 0
    for c in range(1, total):
        t = 0
        x = c
        while (x & 1) == 0:
            x >>= 1
            t += 1
        old = s[t]
        nb = 0
        for d in range(nbr.shape[1]):
            q = nbr[t, d]
            if q >= 0:
                nb += s[q]
        k_val += -2 * old * (nb + bfield[t])
        m_val += -2 * old
        s[t] = -old
        g ^= 1 << t
        K[g] = k_val
        Mg[g] = m_val
    return K, Mg


@njit(cache=True)
def enumerate_indicator(prm, template, site_i, site_j, xo, yo):
    """Boolean event indicator for every configuration index (Gray-code walk)."""
    n = site_i.shape[0]
    total = 1 << n
    out = np.zeros(total, dtype=np.uint8)
    spins = template.copy()
    ny, nx = spins.shape
    visited = np.zeros((ny, nx), dtype=np.uint8)
    queue = np.empty(ny * nx, dtype=np.int64)
    sheet = np.zeros((ny, nx), dtype=np.int64)
    key = np.uint64(0)
    for k in range(n):
        spins[site_i[k], site_j[k]] = -1
    g = 0
    out[0] = 1 if eval_event(prm, spins, key, 0.0, xo, yo, visited, queue, sheet) else 0
    for c in range(1, total):
        t = 0
        x = c
        while (x & 1) == 0:
            x >>= 1
            t += 1
        spins[site_i[t], site_j[t]] = -spins[site_i[t], site_j[t]]
        g ^= 1 << t
        out[g] = 1 if eval_event(prm, spins, key, 0.0, xo, yo, visited, queue, sheet) else 0
    return out


@njit(cache=True)
def neumaier_sum(values, weights, indicator):
    s = 0.0
    comp = 0.0
    for k in range(values.shape[0]):
        if indicator.shape[0] > 0 and indicator[k] == 0:
            continue
        v = values[k] * weights[k] if weights.shape[0] > 0 else values[k]
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
    return s + comp


@njit(cache=True)
def duality_scan(seed, start, stop, nmax, p_lo, p_hi):
    """Rectangles with log-uniform sides in [1, nmax] and uniform p in [p_lo, p_hi).

    Returns (violations, first violating index or -1), where a violation is a
    sample whose horizontal (+)-crossing and vertical (-*)-crossing agree.
    """
    spins = np.zeros((nmax, nmax), dtype=np.int8)
    visited = np.zeros((nmax, nmax), dtype=np.uint8)
    queue = np.empty(nmax * nmax, dtype=np.int64)
    bad = 0
    first = -1
    for idx in range(start, stop):
        key = sample_key(seed, idx)
        a = mix64(key ^ _M1)
        b = mix64(a + _GOLDEN)
        c = mix64(b ^ _M2)
        ux = np.float64(a >> np.uint64(11)) * _TWO53
        uy = np.float64(c >> np.uint64(11)) * _TWO53
        nx = min(nmax, np.int64(np.exp(ux * np.log(nmax + 1.0))))
        ny = min(nmax, np.int64(np.exp(uy * np.log(nmax + 1.0))))
        p = p_lo + (p_hi - p_lo) * (np.float64(b >> np.uint64(11)) * _TWO53)
        spins[:ny, :nx] = 0
        plus = _crossing(spins, key, p, 0, 0, 0, nx - 1, 0, ny - 1, True, 1, visited, queue)
        minus = _crossing(spins, key, p, 0, 0, 0, nx - 1, 0, ny - 1, False, -1, visited, queue)
        if plus == minus:
            bad += 1
            if first < 0:
                first = idx
    return bad, first
