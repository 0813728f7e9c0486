import numpy as np
import pytest

from fsep import gibbs as G
from fsep.exact import ring_word_prob_enumerated, site_marginal, transfer_spec
from fsep.lattice import parity_map, rotate
from fsep.rng import RngContext
from fsep.stats import tv_distance


def no_adjacent_zeros(rows: np.ndarray) -> bool:
    z = rows == 0
    return not (z & np.roll(z, -1, axis=1)).any()


# ---------------------------------------------------------------------------
# structural guarantees


def test_even_gibbs_sector_constraints():
    rng = RngContext(1)
    rows = G.sample_even_gibbs_batch(0.6, 10, rng, 2000)
    assert rows.shape == (2000, 10)
    assert (rows % 2 == 0).all() and (rows >= 0).all()
    assert no_adjacent_zeros(rows)


def test_even_gibbs_batch_matches_single():
    rng = RngContext(7)
    rows = G.sample_even_gibbs_batch(0.5, 9, rng, 12)
    for r in range(12):
        assert np.array_equal(rows[r], G.sample_even_gibbs(0.5, 9, rng.child(r)))


def test_zeta_zero_alternating():
    rng = RngContext(3)
    seen = set()
    for r in range(40):
        row = G.sample_even_gibbs(0.0, 6, rng.child(r))
        seen.add(tuple(row))
    assert seen == {(2, 0, 2, 0, 2, 0), (0, 2, 0, 2, 0, 2)}
    with pytest.raises(ValueError):
        G.sample_even_gibbs(0.0, 5, rng)


def test_sampler_rejects_bad_args():
    rng = RngContext(0)
    with pytest.raises(ValueError):
        G.sample_even_gibbs(1.0, 6, rng)
    with pytest.raises(ValueError):
        G.sample_even_gibbs(-0.1, 6, rng)
    with pytest.raises(ValueError):
        G.sample_even_gibbs(0.5, 2, rng)


# ---------------------------------------------------------------------------
# exactness against the enumeration oracle


def test_small_ring_law_matches_enumeration():
    zeta, M, n = 0.5, 3, 50_000
    rows = G.sample_even_gibbs_batch(zeta, M, RngContext(11), n)
    states, counts = np.unique(rows, axis=0, return_counts=True)
    covered = 0.0
    for st, c in zip(states, counts):
        p = ring_word_prob_enumerated(zeta, M, st).prob
        covered += p
        if c >= 300:
            sigma = np.sqrt(p * (1 - p) / n)
            assert abs(c / n - p) < 5 * sigma, (st.tolist(), c / n, p)
    assert covered > 0.999


def test_site_marginal_tv():
    zeta = 0.5
    rows = G.sample_even_gibbs_batch(zeta, 50, RngContext(13), 4000)
    p = site_marginal(transfer_spec(zeta))
    hmax = 2 * (p.size - 1)
    counts = np.bincount(rows.ravel() // 2, minlength=p.size)
    assert rows.max() <= hmax
    emp = counts / counts.sum()
    assert tv_distance(emp, p) < 0.015


def test_hole_density_and_conditional_heights():
    zeta = 0.5
    rows = G.sample_even_gibbs_batch(zeta, 50, RngContext(17), 4000)
    sites = rows.size
    hole = (rows == 0).mean()
    assert abs(hole - (1 - zeta) / 2) < 6 * np.sqrt(0.25 * 0.75 / sites)
    occ = rows[rows > 0]
    # occupied heights are geometric with ratio zeta^2
    frac2 = (occ == 2).mean()
    assert abs(frac2 - (1 - zeta**2)) < 6 * np.sqrt(0.75 * 0.25 / occ.size)
    assert abs(rows.mean() - 1 / (1 - zeta)) < 0.02


def test_pattern_transition_frequency():
    # along the ring, occupied -> zero happens with probability
    # (1-zeta)/(1+zeta) in the infinite-volume pattern chain
    zeta = 0.5
    rows = G.sample_even_gibbs_batch(zeta, 64, RngContext(19), 4000)
    occ = rows > 0
    nxt_zero = np.roll(rows, -1, axis=1) == 0
    frac = (occ & nxt_zero).sum() / occ.sum()
    expect = (1 - zeta) / (1 + zeta)
    assert abs(frac - expect) < 0.01


# ---------------------------------------------------------------------------
# parity sources


def test_parity_sources_basic():
    rng = RngContext(23)
    assert (G.ParitySource.point().sample_batch(6, rng, 5) == 0).all()
    per = G.ParitySource.periodic((0, 1)).sample_batch(6, rng, 3)
    assert (per == [0, 1, 0, 1, 0, 1]).all()
    rows = np.array([[0, 1, 0], [1, 1, 0]])
    picked = G.ParitySource.from_samples(rows).sample_batch(3, rng, 50)
    keys = {tuple(r) for r in picked}
    assert keys <= {(0, 1, 0), (1, 1, 0)} and len(keys) == 2
    kap = G.ParitySource.bernoulli(0.3).sample_batch(20, rng, 2000)
    assert set(np.unique(kap)) <= {0, 1}
    assert abs(kap.mean() - 0.3) < 6 * np.sqrt(0.3 * 0.7 / kap.size)


def test_parity_source_validation():
    with pytest.raises(ValueError):
        G.ParitySource.bernoulli(1.5)
    with pytest.raises(ValueError):
        G.ParitySource.periodic((0, 2))
    with pytest.raises(ValueError):
        G.ParitySource.periodic(())
    with pytest.raises(ValueError):
        G.ParitySource.from_samples([[0, 2]])
    with pytest.raises(ValueError):
        G.ParitySource.periodic((0, 1, 1)).sample_batch(8, RngContext(0), 1)
    with pytest.raises(ValueError):
        G.ParitySource.from_samples([[0, 1]]).sample_batch(3, RngContext(0), 1)


def test_parity_batch_matches_single():
    rng = RngContext(29)
    src = G.ParitySource.bernoulli(0.4)
    rows = src.sample_batch(11, rng, 8)
    for r in range(8):
        assert np.array_equal(rows[r], src.sample(11, rng.child(r)))


# ---------------------------------------------------------------------------
# shifted stationary family


def test_etis_point_parity_is_even_gibbs():
    rng = RngContext(31)
    rows = G.sample_etis_batch(2.0, G.ParitySource.point(), 12, rng, 100)
    assert (rows % 2 == 0).all()
    assert no_adjacent_zeros(rows)


def test_etis_periodic_parity_exact():
    rng = RngContext(37)
    rows = G.sample_etis_batch(1.5, G.ParitySource.periodic((0, 1)), 8, rng, 50)
    for row in rows:
        assert np.array_equal(parity_map(row), [0, 1, 0, 1, 0, 1, 0, 1])


def test_etis_density():
    rho_e, kappa = 1.5, 0.3
    rng = RngContext(41)
    rows = G.sample_etis_batch(rho_e, G.ParitySource.bernoulli(kappa), 30, rng, 3000)
    assert abs(rows.mean() - (rho_e + kappa)) < 0.02
    # parity ring recovers sigma exactly, so its mean estimates kappa
    assert abs((rows % 2).mean() - kappa) < 0.01


def test_etis_batch_matches_single():
    rng = RngContext(43)
    for parity in (
        G.ParitySource.point(),
        G.ParitySource.bernoulli(0.3),
        G.ParitySource.periodic((0, 1)),
        G.ParitySource.from_samples([[0, 1, 0, 0, 1, 0], [1, 1, 0, 0, 0, 0]]),
    ):
        rows = G.sample_etis_batch(1.5, parity, 6, rng, 6)
        for r in range(6):
            single = G.sample_etis(1.5, parity, 6, rng.child(r))
            assert np.array_equal(rows[r], single)


def test_etis_frozen_background():
    # rho_e = 1 is the zeta = 0 endpoint: alternating (2,0) plus parity
    rng = RngContext(47)
    rows = G.sample_etis_batch(1.0, G.ParitySource.bernoulli(0.5), 8, rng, 200)
    evens = rows - rows % 2
    for row in evens:
        assert tuple(row) in {(2, 0) * 4, (0, 2) * 4}
    with pytest.raises(ValueError):
        G.sample_etis(0.9, G.ParitySource.point(), 8, rng)


# ---------------------------------------------------------------------------
# locked period-2 composites


def test_basic_state_examples():
    rng = RngContext(53)
    row = G.basic_state_sample((0, 1), 8, rng)
    assert tuple(row) in {(2, 1, 2, 1, 2, 1, 2, 1), (1, 2, 1, 2, 1, 2, 1, 2)}
    # phase-0 background puts height 2 on even sites before rotation
    raw = G.basic_state_sample((0,), 6, RngContext(0), phase=0)
    assert tuple(raw) in {(2, 0, 2, 0, 2, 0)}
    raw = G.basic_state_sample((0,), 6, RngContext(0), phase=1)
    assert tuple(raw) in {(0, 2, 0, 2, 0, 2)}


def test_basic_state_covers_even_rotations_only():
    base = None
    seen = set()
    for r in range(200):
        row = G.basic_state_sample((0, 0, 0, 1), 8, RngContext(r))
        if base is None:
            base = row
        seen.add(tuple(row))
    comp = np.array([2, 0, 2, 1, 2, 0, 2, 1])
    expect = {tuple(rotate(comp, q)) for q in range(0, 8, 2)}
    assert seen == expect


def test_basic_state_validation():
    rng = RngContext(0)
    with pytest.raises(ValueError):
        G.basic_state_sample((0, 1), 7, rng)  # odd ring
    with pytest.raises(ValueError):
        G.basic_state_sample((0, 1, 1), 6, rng)  # odd parity period
    with pytest.raises(ValueError):
        G.basic_state_sample((0, 1), 8, rng, phase=2)
    with pytest.raises(ValueError):
        G.basic_state_sample((0, 2), 8, rng)
    with pytest.raises(ValueError):
        G.basic_state_sample((0, 1, 0), 8, rng)  # does not tile
