import itertools
import math

import numpy as np
import pytest

from isingperc.errors import InvalidGeometryError, InvalidParameterError, UnsupportedOperationError
from isingperc.gibbs import (FREE, MINUS, PERIODIC, PLUS, T_C, BoundaryCondition, Chain,
                             InterpolationSchedule, ModelParams, SpinConfig, bernoulli_config, energy,
                             hamiltonian, heat_bath_conditional, heat_bath_sweep, local_field, sample,
                             wolff_ghost_update)
from isingperc.lattice import Rect
from isingperc.oracle import enumerate_measure


def brute_energy(spins, h, bc, periodic=False):
    """Direct double loop over ordered pairs, boundary spins added per missing neighbour."""
    ny, nx = spins.shape
    pair = 0.0
    field = 0.0
    for i in range(ny):
        for j in range(nx):
            s = spins[i, j]
            for di, dj in ((0, 1), (0, -1), (1, 0), (-1, 0)):
                a, b = i + di, j + dj
                if periodic:
                    pair += s * spins[a % ny, b % nx]
                elif 0 <= a < ny and 0 <= b < nx:
                    pair += s * spins[a, b]
                else:
                    field += bc * s
            field += h * s
    return -0.5 * pair - field


@pytest.mark.parametrize("tag,bval", [(FREE, 0), (PLUS, 1), (MINUS, -1)])
def test_hamiltonian_matches_brute_force(tag, bval):
    rng = np.random.default_rng(1)
    rect = Rect(0, 4, 0, 3)
    for _ in range(20):
        spins = rng.choice(np.array([-1, 1], dtype=np.int8), size=rect.shape)
        cfg = SpinConfig(rect.sites(), spins, BoundaryCondition(tag))
        assert hamiltonian(cfg, 0.37) == pytest.approx(brute_energy(spins, 0.37, bval), abs=1e-12)


def test_periodic_hamiltonian():
    rng = np.random.default_rng(2)
    rect = Rect(0, 3, 0, 4)
    spins = rng.choice(np.array([-1, 1], dtype=np.int8), size=rect.shape)
    cfg = SpinConfig(rect.sites(), spins, BoundaryCondition(PERIODIC))
    assert hamiltonian(cfg, -0.2) == pytest.approx(brute_energy(spins, -0.2, 0, periodic=True))


def test_all_plus_torus_energy():
    cfg = SpinConfig.filled(Rect(0, 3, 0, 3), 1, BoundaryCondition(PERIODIC))
    # 32 bonds, 16 sites
    assert hamiltonian(cfg, 0.5) == pytest.approx(-32 - 8)


def test_small_torus_rejected():
    with pytest.raises(InvalidGeometryError):
        hamiltonian(SpinConfig.filled(Rect(0, 1, 0, 3), 1, BoundaryCondition(PERIODIC)), 0.0)


def test_energy_needs_ising():
    cfg = SpinConfig.filled(1)
    assert energy(cfg, ModelParams.ising(2.0, 0.1)) == hamiltonian(cfg, 0.1)
    with pytest.raises(UnsupportedOperationError):
        energy(cfg, ModelParams.bernoulli(0.5))


def test_model_validation():
    with pytest.raises(InvalidParameterError):
        ModelParams.ising(0.0, 0.0)
    with pytest.raises(InvalidParameterError):
        ModelParams.bernoulli(1.5)
    assert ModelParams.ising(2.0, 0.3).beta == 0.5
    assert T_C == pytest.approx(2.269185314213022)


@pytest.mark.parametrize("h,hc", [(0.3, 0.1), (-0.2, 0.1), (0.1, 0.1)])
def test_interpolation_schedule(h, hc):
    s = InterpolationSchedule(h, hc)
    ends = sorted([s.field(0.0), s.field(1.0)])
    assert ends == pytest.approx(sorted([h, hc]))
    assert s.rate == abs(h - hc)
    assert (s.field(0.75) - s.field(0.25)) / 0.5 == pytest.approx(s.rate)


def test_local_field_and_conditional():
    cfg = SpinConfig.filled(1, 1, BoundaryCondition(PLUS))
    assert local_field(cfg, (0, 0), 0.2) == pytest.approx(4.2)
    assert local_field(cfg, (1, 1), 0.0) == pytest.approx(4.0)  # two inside, two boundary
    assert heat_bath_conditional(0.0, 3.0) == 0.5
    assert heat_bath_conditional(1.0, 0.5) == pytest.approx(math.exp(0.5) / (math.exp(0.5) + math.exp(-0.5)))


def test_heat_bath_matches_dlr():
    params = ModelParams.ising(2.5, 0.3)
    meas = enumerate_measure(1, params, BoundaryCondition(PLUS))
    for c in range(0, 512, 7):
        cfg = meas.space.config(c)
        for v in [(0, 0), (1, -1), (-1, 0)]:
            exact = meas.site_conditional(cfg, v)
            assert exact == pytest.approx(heat_bath_conditional(local_field(cfg, v, 0.3), params.beta), abs=1e-12)


def _empirical_marginals(params, bc, rect, moves, n=20_000, seed=0):
    start = SpinConfig.filled(rect, 1, bc)
    chain = Chain(start, params, np.random.default_rng(seed))
    counts = {}
    moves(chain, 100)
    for _ in range(n):
        moves(chain, 1)
        key = chain.spins.tobytes()
        counts[key] = counts.get(key, 0) + 1
    return counts


@pytest.mark.parametrize("mover", ["heat-bath", "wolff", "mixed"])
def test_chains_sample_the_gibbs_measure(mover):
    """Total variation between the empirical law on a 2x3 plus-bounded region and the exact law."""
    rect = Rect(0, 2, 0, 1)
    bc = BoundaryCondition(PLUS)
    params = ModelParams.ising(2.0, -0.4)
    moves = {
        "heat-bath": lambda ch, k: ch.sweep(k),
        "wolff": lambda ch, k: ch.wolff(3 * k),
        "mixed": lambda ch, k: (ch.sweep(k), ch.wolff(k)),
    }[mover]
    n = 40_000
    counts = _empirical_marginals(params, bc, rect, moves, n)
    meas = enumerate_measure(rect, params, bc)
    tv = 0.0
    for c in range(64):
        key = np.asarray(meas.space.config(c).spins).tobytes()
        tv += abs(counts.get(key, 0) / n - meas.probs[c])
    assert tv / 2 < 0.03


def test_wolff_is_exact_at_zero_field_on_torus():
    rect = Rect(0, 2, 0, 2)
    bc = BoundaryCondition(PERIODIC)
    params = ModelParams.ising(3.0, 0.0)
    counts = _empirical_marginals(params, bc, rect, lambda ch, k: ch.wolff(2 * k), 30_000, seed=4)
    meas = enumerate_measure(rect, params, bc)
    m_exact = meas.expect(meas.space.M.astype(float) ** 2)
    m_emp = sum(c * float(np.frombuffer(k, dtype=np.int8).sum()) ** 2 for k, c in counts.items()) / 30_000
    assert m_emp == pytest.approx(m_exact, rel=0.05)


def test_public_updates_do_not_mutate():
    cfg = SpinConfig.filled(2, -1, BoundaryCondition(PERIODIC))
    params = ModelParams.ising(1.0, 6.0)
    new = heat_bath_sweep(cfg, params, np.random.default_rng(0))
    assert (cfg.spins == -1).all()
    assert new.plus_fraction() > 0.5
    w = wolff_ghost_update(cfg, params, np.random.default_rng(0), 5)
    assert (cfg.spins == -1).all() and w.region == cfg.region


def test_updates_need_ising():
    with pytest.raises(UnsupportedOperationError):
        heat_bath_sweep(SpinConfig.filled(1), ModelParams.bernoulli(0.5), np.random.default_rng(0))


@pytest.mark.parametrize("p,value", [(1.0, 1), (0.0, -1)])
def test_bernoulli_extremes(p, value):
    cfg = bernoulli_config(4, p, seed=3, index=7)
    assert (cfg.spins == value).all()


def test_bernoulli_is_counter_based_and_monotone():
    a = bernoulli_config(6, 0.4, seed=9, index=12)
    b = bernoulli_config(6, 0.4, seed=9, index=12)
    c = bernoulli_config(6, 0.7, seed=9, index=12)
    assert np.array_equal(a.spins, b.spins)
    assert np.all(c.spins >= a.spins)
    assert not np.array_equal(a.spins, bernoulli_config(6, 0.4, seed=9, index=13).spins)


def test_bernoulli_density():
    plus = sum(bernoulli_config(10, 0.3, 1, i).plus_fraction() for i in range(200)) / 200
    assert plus == pytest.approx(0.3, abs=0.01)


def test_sample_stream_is_seeded():
    params = ModelParams.ising(3.0, 0.1)
    a = [c.spins.copy() for c, _ in zip(sample(params, 2, rng=np.random.default_rng(5)), range(3))]
    b = [c.spins.copy() for c, _ in zip(sample(params, 2, rng=np.random.default_rng(5)), range(3))]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_spinconfig_validation():
    with pytest.raises(ValueError):
        SpinConfig(Rect(0, 1, 0, 0).sites(), np.array([[1, 0]], dtype=np.int8))
    with pytest.raises(InvalidGeometryError):
        SpinConfig.filled(1).spin((5, 5))
    cfg = SpinConfig.from_function(1, lambda x, y: 1 if x >= 0 else -1)
    assert cfg.spin((-1, 1)) == -1 and cfg.flipped((-1, 1)).spin((-1, 1)) == 1


def test_spinconfig_is_immutable():
    cfg = SpinConfig.filled(1)
    with pytest.raises(ValueError):
        cfg.spins[0, 0] = -1


def test_all_configs_of_free_2x2_have_distinct_indices():
    rect = Rect(0, 1, 0, 1)
    meas = enumerate_measure(rect, ModelParams.ising(2.0, 0.0))
    seen = set()
    for bits in itertools.product([-1, 1], repeat=4):
        cfg = SpinConfig(rect.sites(), np.array(bits, dtype=np.int8).reshape(2, 2))
        seen.add(meas.index_of(cfg))
    assert seen == set(range(16))
