import itertools
import math

import numpy as np
import pytest

import reference as ref
from isingperc.errors import CapacityError, InvalidGeometryError
from isingperc.events import FourArm, HalfPlane, OneArm, SpinAt, parse_event
from isingperc.gibbs import FREE, MINUS, PERIODIC, PLUS, BoundaryCondition, ModelParams, SpinConfig, hamiltonian
from isingperc.lattice import Rect, Site, box_sites
from isingperc.oracle import enumerate_measure, exhaustive_event_check, russo_check

HALF = ModelParams.bernoulli(0.5)


def reference_count(predicate):
    sites = sorted(ref.rect_sites(-1, 1, -1, 1))
    return sum(bool(predicate(dict(zip(sites, bits)))) for bits in itertools.product([1, -1], repeat=9))


# counts over the 512 configurations of S(1), cross-checked by the reference detectors
@pytest.mark.parametrize("event,count,ref_pred", [
    (OneArm(1), 240, lambda s: ref.one_arm(s, 1)),
    (HalfPlane(1, "E2"), 46, lambda s: ref.halfplane(s, 1, "E2")),
    (FourArm(Site(0, 0), 1), 154, lambda s: ref.pivotal_for_crossing(s, (0, 0), 1)),
    (parse_event("crossing h plus rect=-1..1x-1..1"), 197, lambda s: ref.crossing(s, -1, 1, -1, 1)),
])
def test_uniform_counts_on_small_box(event, count, ref_pred):
    assert reference_count(ref_pred) == count
    assert enumerate_measure(1, HALF).prob(event) == pytest.approx(count / 512, abs=1e-15)


def test_three_arm_needs_room():
    # E3 at n = 1 forces (0, 0) minus and (0, 1), (+-1, 1) plus; the minus arm
    # from (0, 0) then has to reach the bottom or the sides.
    p = enumerate_measure(1, HALF).prob(HalfPlane(1, "E3"))
    assert p == pytest.approx(reference_count(lambda s: ref.halfplane(s, 1, "E3")) / 512)


def test_single_site_with_plus_boundary():
    meas = enumerate_measure(Rect(0, 0, 0, 0), ModelParams.ising(1.0, 0.0), BoundaryCondition(PLUS))
    assert meas.prob(SpinAt(Site(0, 0), 1)) == pytest.approx(math.exp(4) / (math.exp(4) + math.exp(-4)))


@pytest.mark.parametrize("T,h", [(1.5, 0.0), (2.5, 0.3), (4.0, -0.7)])
def test_atoms_match_direct_boltzmann_weights(T, h):
    rect = Rect(0, 2, 0, 1)
    bc = BoundaryCondition(MINUS)
    meas = enumerate_measure(rect, ModelParams.ising(T, h), bc)
    weights = {}
    for bits in itertools.product([-1, 1], repeat=6):
        cfg = SpinConfig(rect.sites(), np.array(bits, dtype=np.int8).reshape(2, 3), bc)
        weights[bits] = (cfg, math.exp(-hamiltonian(cfg, h) / T))
    Z = sum(w for _, w in weights.values())
    assert meas.Z == pytest.approx(Z, rel=1e-12)
    for cfg, w in weights.values():
        assert meas.atom(cfg) == pytest.approx(w / Z, rel=1e-12)


def test_total_mass_is_one():
    for bc in (BoundaryCondition(PERIODIC), BoundaryCondition(FREE), BoundaryCondition(PLUS)):
        meas = enumerate_measure(Rect(0, 3, 0, 3), ModelParams.ising(2.2, 0.05), bc)
        assert meas.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_default_boundary():
    assert enumerate_measure(1, HALF).bc.tag == PERIODIC
    assert enumerate_measure(Rect(0, 1, 0, 3), HALF).bc.tag == FREE


def test_spin_flip_symmetry_at_zero_field():
    meas = enumerate_measure(Rect(0, 3, 0, 2), ModelParams.ising(2.0, 0.0))
    assert meas.prob(SpinAt(Site(1, 1), 1)) == pytest.approx(0.5, abs=1e-14)


def test_conditional_and_callable_events():
    meas = enumerate_measure(1, ModelParams.ising(2.0, 0.2))
    a = SpinAt(Site(0, 0), 1)
    both = meas.prob(lambda c: c.spin((0, 0)) == 1 and c.spin((1, 0)) == 1)
    assert meas.conditional(a, SpinAt(Site(1, 0), 1)) == pytest.approx(both / meas.prob(SpinAt(Site(1, 0), 1)))


def test_capacity_limit():
    with pytest.raises(CapacityError):
        enumerate_measure(Rect(0, 5, 0, 4), HALF)


def test_support_checked():
    with pytest.raises(InvalidGeometryError):
        enumerate_measure(1, HALF).prob(OneArm(2))


@pytest.mark.parametrize("torus,text", [
    (1, "spin 0,0 +"),
    (1, "onearm plus n=1"),
    (Rect(0, 3, 0, 2), "crossing h plus rect=0..3x0..2"),
])
@pytest.mark.parametrize("h,hc", [(0.4, 0.0), (-0.3, 0.1)])
def test_russo_identity(torus, text, h, hc):
    r = russo_check(torus, parse_event(text), h, hc, T=2.5)
    assert r.rel_gap < 1e-6
    assert r.lhs != 0.0


def test_russo_sign_follows_monotonicity():
    # increasing event, field moving up: derivative positive
    r = russo_check(1, parse_event("spin 0,0 +"), 0.5, 0.0, T=2.0)
    assert r.lhs > 0 and r.rhs > 0


def test_russo_needs_full_torus():
    with pytest.raises(InvalidGeometryError):
        russo_check(box_sites(2) - box_sites(0), parse_event("spin 1,1 +"), 0.2, 0.0, T=2.0)


def test_exhaustive_check_finds_counterexample():
    res = exhaustive_event_check(1, lambda c: c.spin((0, 0)) == 1)
    assert not res and res.counterexample.spin((0, 0)) == -1
    res = exhaustive_event_check(1, (SpinAt(Site(0, 0), 1), "implies", OneArm(1)))
    assert not res


def test_exhaustive_relations():
    assert exhaustive_event_check(Rect(0, 2, 0, 1), (parse_event("crossing h plus rect=0..2x0..1"), "xor",
                                                     parse_event("crossing v minus rect=0..2x0..1")))
    assert exhaustive_event_check(1, (FourArm(Site(0, 0), 1), "eq",
                                      parse_event("pivotal v=0,0 : crossing h plus rect=-1..1x-1..1")))
