import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import reference as ref
from isingperc.estimators import Estimate, fit_exponent
from isingperc.events import ArmSpec, Arms, Crossing, has_crossing, is_pivotal, lowest_crossing, one_arm, parse_event
from isingperc.gibbs import BoundaryCondition, SpinConfig, bernoulli_config, hamiltonian, local_field
from isingperc.lattice import Rect, SiteSet, box_sites

spin_values = st.sampled_from([-1, 1])


@st.composite
def configs(draw, max_side=7):
    nx = draw(st.integers(1, max_side))
    ny = draw(st.integers(1, max_side))
    spins = draw(arrays(np.int8, (ny, nx), elements=spin_values))
    return SpinConfig(Rect(0, nx - 1, 0, ny - 1).sites(), spins)


@st.composite
def boxes(draw, n=3):
    spins = draw(arrays(np.int8, (2 * n + 1, 2 * n + 1), elements=spin_values))
    return SpinConfig(box_sites(n), spins)


@given(configs())
def test_crossing_duality(cfg):
    r = cfg.rect
    assert has_crossing(cfg, r, "h", "plus") != has_crossing(cfg, r, "v", "minus")


@given(configs(), st.data())
def test_plus_crossing_is_increasing(cfg, data):
    r = cfg.rect
    x = data.draw(st.integers(r.x_lo, r.x_hi))
    y = data.draw(st.integers(r.y_lo, r.y_hi))
    up = cfg if cfg.spin((x, y)) == 1 else cfg.flipped((x, y))
    assert has_crossing(up, r) >= has_crossing(cfg, r)
    assert has_crossing(up, r, "v", "minus") <= has_crossing(cfg, r, "v", "minus")


@given(boxes(), st.integers(-3, 3), st.integers(-3, 3))
def test_pivotality_ignores_the_pivot(cfg, x, y):
    ev = Crossing(cfg.rect)
    assert is_pivotal(cfg, (x, y), ev) == is_pivotal(cfg.flipped((x, y)), (x, y), ev)


@given(boxes())
def test_one_arm_is_nested(cfg):
    hits = [one_arm(cfg, n) for n in (1, 2, 3)]
    assert hits == sorted(hits, reverse=True)


@given(configs(max_side=6))
def test_lowest_crossing_is_a_crossing(cfg):
    lc = lowest_crossing(cfg, cfg.rect)
    assert (lc is None) == (not has_crossing(cfg, cfg.rect))
    if lc is not None:
        path = lc.path
        assert path[0].x1 == cfg.rect.x_lo and path[-1].x1 == cfg.rect.x_hi
        assert all(cfg.spin(s) == 1 for s in path)
        assert len(set(path)) == len(path)


@given(configs(max_side=5), st.floats(-2, 2), st.sampled_from(["free", "plus", "minus"]), st.data())
def test_flip_energy_is_twice_the_local_field(cfg, h, tag, data):
    cfg = SpinConfig(cfg.region, cfg.spins, BoundaryCondition(tag))
    r = cfg.rect
    v = (data.draw(st.integers(r.x_lo, r.x_hi)), data.draw(st.integers(r.y_lo, r.y_hi)))
    dE = hamiltonian(cfg.flipped(v), h) - hamiltonian(cfg, h)
    assert dE == pytest.approx(2 * cfg.spin(v) * local_field(cfg, v, h), abs=1e-9)


@given(st.integers(0, 2 ** 32), st.integers(0, 10 ** 6), st.floats(0, 1), st.floats(0, 1))
def test_bernoulli_coupling_is_monotone(seed, index, p, q):
    lo, hi = sorted((p, q))
    a = bernoulli_config(3, lo, seed, index).spins
    b = bernoulli_config(3, hi, seed, index).spins
    assert np.all(a <= b)


@given(st.integers(0, 4), st.integers(0, 4), st.integers(1, 5), st.integers(1, 6), st.booleans())
def test_arm_text_round_trip(k1, k2, r, gap, half):
    assume(k1 + k2 >= 1)
    ev = Arms(ArmSpec(k1, k2, r, r + gap, half))
    assert parse_event(ev.to_text()) == ev


@given(st.floats(-3, -0.05), st.floats(0.01, 10))
def test_fit_recovers_pure_power_law(slope, amp):
    pts = [(n, Estimate(amp * n ** slope, 0.0, 1, 0)) for n in (2, 4, 8, 16, 32)]
    assert fit_exponent(pts).slope == pytest.approx(slope, abs=1e-9)


masks = arrays(bool, (4, 5))


@given(masks, masks)
def test_siteset_algebra(a, b):
    rect = Rect(-2, 2, -1, 2)
    A, B = SiteSet(rect, a), SiteSet(rect, b)
    assert len(A | B) + len(A & B) == len(A) + len(B)
    assert (A - B).isdisjoint(B)
    assert (A & B).issubset(A)
    if len(A):
        assert SiteSet.from_sites(list(A)) == A


@given(boxes(2))
def test_kernel_matches_reference_crossing(cfg):
    spins = ref.as_dict(cfg)
    for orient in "hv":
        for color in (1, -1):
            assert has_crossing(cfg, cfg.rect, orient, color) == ref.crossing(spins, -2, 2, -2, 2, orient == "h", color)
