import numpy as np
import pytest

import reference as ref
from conftest import config_from_rows
from isingperc.errors import InvalidGeometryError, InvalidSpecError
from isingperc.events import (HALF_KINDS, Always, ArmSpec, Arms, Circuit, Crossing, FourArm, HalfPlane,
                              OneArm, Pivotal, SpinAt, annulus_crossing, arm_signature, evaluate,
                              four_arm_at, halfplane_boundary_event, has_arm_event, has_circuit,
                              has_crossing, is_pivotal, lowest_crossing, one_arm, parse_event)
from isingperc.gibbs import SpinConfig
from isingperc.lattice import Annulus, Rect, Site, box_sites


def random_box(rng, n, p=0.5):
    spins = ref.random_dict(rng, -n, n, -n, n, p)
    return spins, SpinConfig(box_sites(n), ref.to_array(spins, -n, n, -n, n))


# ---------------------------------------------------------------- crossings

def test_crossing_by_hand():
    cfg = config_from_rows(["-+-",
                            "-+-",
                            "++-"])
    rect = cfg.rect
    assert has_crossing(cfg, rect, "v", "plus")
    assert not has_crossing(cfg, rect, "h", "plus")
    assert has_crossing(cfg, rect, "v", "minus")
    # the minus sites on the left only touch diagonally across the plus column
    assert not has_crossing(cfg, rect, "h", "minus")


@pytest.mark.parametrize("p", [0.4, 0.6])
def test_crossing_matches_reference(p):
    rng = np.random.default_rng(int(10 * p))
    for _ in range(60):
        spins, cfg = random_box(rng, 3, p)
        for orient in "hv":
            for color in (1, -1):
                want = ref.crossing(spins, -3, 3, -3, 3, orient == "h", color)
                assert has_crossing(cfg, cfg.rect, orient, color) == want
        sub = Rect(-2, 3, -1, 1)
        assert has_crossing(cfg, sub) == ref.crossing(spins, -2, 3, -1, 1)


def test_crossing_outside_region_rejected():
    cfg = SpinConfig.filled(2)
    with pytest.raises(InvalidGeometryError):
        has_crossing(cfg, Rect(-3, 3, 0, 0))


# --------------------------------------------------------- arms and circuits

@pytest.mark.parametrize("n", [1, 2, 4])
def test_one_arm_matches_reference(n):
    rng = np.random.default_rng(n)
    for _ in range(80):
        spins, cfg = random_box(rng, n, 0.6)
        for color in (1, -1):
            assert one_arm(cfg, n, color) == ref.one_arm(spins, n, color)


def test_circuit_matches_reference():
    rng = np.random.default_rng(21)
    for _ in range(60):
        spins, cfg = random_box(rng, 3, 0.65)
        for color in (1, -1):
            for r, R in ((1, 2), (1, 3), (2, 3)):
                assert has_circuit(cfg, Annulus(r, R), color) == ref.circuit(spins, r, R, color)


def test_circuit_needs_to_surround_the_hole():
    # a plus loop in the annulus that does not wind around the origin
    rows = ["-----",
            "-+++-",
            "-+-+-",
            "-+++-",
            "-----"]
    cfg = config_from_rows(rows, -2, -2)
    assert has_circuit(cfg, Annulus(1, 2), "plus")
    off = config_from_rows(["+++--",
                            "+-+--",
                            "+++--",
                            "-----",
                            "-----"], -2, -2)
    assert not has_circuit(off, Annulus(1, 2), "plus")


@pytest.mark.parametrize("half", [False, True])
def test_arm_letters_count_crossing_clusters(half):
    rng = np.random.default_rng(3 + half)
    for _ in range(60):
        spins, cfg = random_box(rng, 5, 0.59)
        for r in (1, 2):
            word = arm_signature(cfg, r, 5, half_plane=half)
            P, M = ref.crossing_clusters(spins, r, 5, half)
            assert (word.count("+"), word.count("-*")) == (P, M)


def test_arm_count_rule():
    rng = np.random.default_rng(17)
    for _ in range(60):
        spins, cfg = random_box(rng, 4, 0.59)
        P, M = ref.crossing_clusters(spins, 1, 4)
        for k1, k2 in ((1, 0), (0, 1), (1, 1), (2, 2), (3, 1)):
            want = P >= k1 and M >= k2 and (k2 < 2 or k1 >= k2)
            assert has_arm_event(cfg, ArmSpec(k1, k2, 1, 4)) == want


def test_single_arm_events_agree_with_annulus_crossing():
    rng = np.random.default_rng(5)
    for _ in range(40):
        _, cfg = random_box(rng, 4)
        for color, spec in ((1, ArmSpec(1, 0, 2, 4)), (-1, ArmSpec(0, 1, 2, 4))):
            assert has_arm_event(cfg, spec) == annulus_crossing(cfg, Annulus(2, 4), color)


def test_arm_spec_validation():
    with pytest.raises(InvalidSpecError):
        ArmSpec(0, 0, 1, 4)
    with pytest.raises(InvalidGeometryError):
        ArmSpec(1, 1, 4, 4)


# ------------------------------------------------------------ half-plane

@pytest.mark.parametrize("kind", HALF_KINDS)
def test_halfplane_matches_reference(kind):
    rng = np.random.default_rng(HALF_KINDS.index(kind))
    hits = 0
    for _ in range(300):
        n = int(rng.integers(2, 5))
        p = 0.4 if kind.endswith("*") else 0.6
        spins, cfg = random_box(rng, n, p)
        # plant the anchor pattern half of the time so both outcomes occur
        if rng.random() < 0.5:
            c = -1 if kind.endswith("*") else 1
            pattern = ({(0, n): -c, (-1, n): c} if kind.startswith("E2")
                       else {(0, n): c, (-1, n): c, (1, n): c, (0, n - 1): -c})
            spins.update(pattern)
            cfg = SpinConfig(box_sites(n), ref.to_array(spins, -n, n, -n, n))
        want = ref.halfplane(spins, n, kind)
        hits += want
        assert halfplane_boundary_event(cfg, n, kind) == want
    assert hits > 10


def test_halfplane_validation():
    with pytest.raises(InvalidSpecError):
        HalfPlane(4, "E4")
    with pytest.raises(InvalidGeometryError):
        HalfPlane(0)


# -------------------------------------------------------------- pivotality

def test_pivotal_matches_reference():
    rng = np.random.default_rng(9)
    for _ in range(40):
        spins, cfg = random_box(rng, 3, 0.59)
        for v in ((0, 0), (1, -2), (-3, 3)):
            want = ref.pivotal_for_crossing(spins, v, 3)
            assert four_arm_at(cfg, v, 3) == want
            assert four_arm_at(cfg, v, 3, "arms") == want
            assert is_pivotal(cfg, v, Crossing(cfg.rect)) == want


def test_pivotal_of_nested_pivotal_rejected():
    with pytest.raises(InvalidSpecError):
        Pivotal(Site(0, 0), Pivotal(Site(0, 0), Always()))


def test_four_arm_method_and_site_checks():
    cfg = SpinConfig.filled(2)
    with pytest.raises(ValueError):
        four_arm_at(cfg, (0, 0), 2, "magic")
    with pytest.raises(InvalidGeometryError):
        four_arm_at(cfg, (0, 3), 2)


# ----------------------------------------------------------- lowest crossing

def _check_lowest(spins, cfg, rect):
    x0, x1, y0, y1 = rect.x_lo, rect.x_hi, rect.y_lo, rect.y_hi
    lc = lowest_crossing(cfg, rect)
    paths = ref.all_crossings(spins, x0, x1, y0, y1)
    if not paths:
        assert lc is None
        return
    path = [tuple(s) for s in lc.path]
    assert path[0][0] == x0 and path[-1][0] == x1
    assert len(set(path)) == len(path)
    assert all(spins[s] == 1 for s in path)
    assert all(abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1 for a, b in zip(path, path[1:]))
    below = ref.below_region(path, x0, x1, y0, y1)
    for other in paths:
        assert below <= ref.below_region(other, x0, x1, y0, y1) | set(other)


def test_lowest_crossing_against_all_crossings():
    rng = np.random.default_rng(31)
    seen = 0
    for _ in range(120):
        spins = ref.random_dict(rng, 0, 4, 0, 3, 0.65)
        cfg = SpinConfig(Rect(0, 4, 0, 3).sites(), ref.to_array(spins, 0, 4, 0, 3))
        _check_lowest(spins, cfg, cfg.rect)
        seen += lowest_crossing(cfg, cfg.rect) is not None
    assert seen > 30


def test_lowest_crossing_in_subrectangle():
    rng = np.random.default_rng(32)
    for _ in range(40):
        spins, cfg = random_box(rng, 3, 0.65)
        rect = Rect(-2, 2, -3, 0)
        sub = {s: v for s, v in spins.items() if rect.contains(Rect(s[0], s[0], s[1], s[1]))}
        _check_lowest(sub, cfg, rect)


def test_lowest_crossing_prefers_bottom_route():
    cfg = config_from_rows(["+++++",
                            "+---+",
                            "+++++"])
    lc = lowest_crossing(cfg, cfg.rect)
    assert {s.x2 for s in lc.path} == {0}
    v, unique = lc.central_highest_point()
    assert v is not None and not unique


def test_central_highest_point_unique():
    cfg = config_from_rows(["-+++-",
                            "++-++"])
    lc = lowest_crossing(cfg, cfg.rect)
    v, unique = lc.central_highest_point()
    assert (tuple(v), unique) == ((2, 1), True)


# -------------------------------------------------------------- text forms

TEXTS = [
    "always",
    "spin 0,0 +",
    "spin -1,2 -",
    "crossing h plus rect=-8..8x-8..8",
    "crossing v minus rect=0..3x-1..2",
    "circuit plus r=1 R=2",
    "onearm minus n=8",
    "arms k1=2 k2=2 r=1 R=8",
    "arms k1=1 k2=2 r=1 R=8 half",
    "halfplane E3* n=16",
    "fourarm v=0,0 n=8",
    "pivotal v=0,0 : crossing h plus rect=-1..1x-1..1",
]


@pytest.mark.parametrize("text", TEXTS)
def test_text_round_trip(text):
    ev = parse_event(text)
    assert ev.to_text() == text
    assert parse_event(ev.to_text()) == ev


@pytest.mark.parametrize("text", ["", "blob n=3", "onearm plus", "crossing d plus rect=0..1x0..1",
                                  "pivotal v=0,0 : pivotal v=0,0 : always", "spin 0 +"])
def test_bad_text(text):
    with pytest.raises((InvalidSpecError, InvalidGeometryError)):
        parse_event(text)


def test_evaluate_simple_events():
    cfg = SpinConfig.filled(2)
    for ev in (Always(), SpinAt(Site(1, 1), 1), OneArm(2), FourArm(Site(0, 0), 2),
               Arms(ArmSpec(1, 0, 1, 2)), Circuit(Annulus(1, 2))):
        assert isinstance(evaluate(cfg, ev), bool)
    assert evaluate(cfg, OneArm(2)) and not evaluate(cfg, FourArm(Site(0, 0), 2))
    with pytest.raises(InvalidGeometryError):
        evaluate(cfg, OneArm(3))
