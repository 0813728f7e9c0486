"""Backend contract: numba and numpy kernels are bit-identical."""

import numpy as np
import pytest

from fsep.rng import RngContext, child_key_array

kp = pytest.importorskip("fsep._kernels_numpy")
kb = pytest.importorskip("fsep._kernels_numba")

SEEDS = [0, 1, 2, 3, 17]


def _occ(seed, M=37, rho=0.55):
    gen = np.random.default_rng(seed)
    return (gen.random(M) < rho).astype(np.uint8)


def _stk(seed, M=23, top=5):
    return np.random.default_rng(seed).integers(0, top, size=M).astype(np.int64)


@pytest.mark.parametrize("seed", SEEDS)
def test_fssep_run_identical(seed):
    key = RngContext(seed).ukey
    occ = _occ(seed)
    assert np.array_equal(kb.fssep_run(occ, key, 0, 200), kp.fssep_run(occ, key, 0, 200))


@pytest.mark.parametrize("seed", SEEDS)
def test_ssm_run_identical(seed):
    key = RngContext(seed).ukey
    h = _stk(seed)
    assert np.array_equal(kb.ssm_run(h, key, 0, 200), kp.ssm_run(h, key, 0, 200))


@pytest.mark.parametrize("seed", SEEDS)
def test_until_frozen_identical(seed):
    key = RngContext(seed).ukey
    occ = _occ(seed, M=64, rho=0.4)
    oa, sa = kb.fssep_until_frozen(occ, key, 0, 100_000)
    ob, sb = kp.fssep_until_frozen(occ, key, 0, 100_000)
    assert sa == sb and np.array_equal(oa, ob)
    assert sa >= 0 and kp.mover_count(oa) == 0


@pytest.mark.parametrize("seed", SEEDS)
def test_until_member_identical(seed):
    key = RngContext(seed).ukey
    occ = _occ(seed, M=16, rho=0.5)
    occ[: 8 - occ[:].sum() if occ.sum() < 8 else 0] = 1  # nudge toward balance
    ma = kb.fssep_until_member(occ, key, 0, 50_000)
    mb = kp.fssep_until_member(occ, key, 0, 50_000)
    assert ma[1:] == mb[1:] and np.array_equal(ma[0], mb[0])


@pytest.mark.parametrize("seed", SEEDS)
def test_ssm_run_checked_identical(seed):
    key = RngContext(seed).ukey
    h = _stk(seed)
    ra = kb.ssm_run_checked(h, key, 0, 100)
    rb = kp.ssm_run_checked(h, key, 0, 100)
    assert np.array_equal(ra[0], rb[0]) and ra[1:] == rb[1:]


@pytest.mark.parametrize("seed", SEEDS)
def test_batch_kernels_identical(seed):
    key = RngContext(seed).ukey
    keys = child_key_array(key, np.arange(50))
    h2 = np.random.default_rng(seed).integers(0, 5, size=(50, 23)).astype(np.int64)
    assert np.array_equal(kb.ssm_step_batch(h2, keys, 7), kp.ssm_step_batch(h2, keys, 7))
    img_a, len_a = kb.phi_apply_batch(h2)
    img_b, len_b = kp.phi_apply_batch(h2)
    assert np.array_equal(img_a, img_b) and np.array_equal(len_a, len_b)
    assert np.array_equal(
        kb.fssep_step_batch(img_a, len_a, keys, 3),
        kp.fssep_step_batch(img_b, len_b, keys, 3),
    )
    shifts = np.random.default_rng(seed + 1).integers(-5, 9, size=50)
    assert np.array_equal(
        kb.rotate_batch(img_a, len_a, shifts), kp.rotate_batch(img_b, len_b, shifts)
    )


def test_gibbs_pattern_batch_identical():
    keys = child_key_array(RngContext(5).ukey, np.arange(400))
    q0, lam = 0.75, 1.5
    wn = np.array([[0.0, 1.0], [q0, 1.0]]) / lam
    pows = np.empty((25, 2, 2))
    pows[0] = np.eye(2)
    for m in range(1, 25):
        pows[m] = pows[m - 1] @ wn
    assert np.array_equal(kb.gibbs_pattern_batch(pows, keys), kp.gibbs_pattern_batch(pows, keys))


# ---------------------------------------------------------------------------
# shared physical invariants (run on the numba backend, the default)


@pytest.mark.parametrize("seed", SEEDS)
def test_particle_conservation(seed):
    key = RngContext(seed).ukey
    occ = _occ(seed, M=101)
    out = kb.fssep_run(occ, key, 0, 500)
    assert out.sum() == occ.sum()
    h = _stk(seed, M=51)
    hout = kb.ssm_run(h, key, 0, 500)
    assert hout.sum() == h.sum()
    assert hout.min() >= 0


@pytest.mark.parametrize("seed", SEEDS)
def test_batch_rows_match_single_runs(seed):
    base = RngContext(seed)
    keys = child_key_array(base.ukey, np.arange(20))
    h2 = np.random.default_rng(seed).integers(0, 4, size=(20, 11)).astype(np.int64)
    stepped = kb.ssm_step_batch(h2, keys, 9)
    for r in range(20):
        assert np.array_equal(stepped[r], kb.ssm_step(h2[r], keys[r], 9))


def test_fssep_step_batch_rows_match_single():
    keys = child_key_array(RngContext(3).ukey, np.arange(12))
    gen = np.random.default_rng(3)
    lengths = gen.integers(8, 20, size=12)
    width = int(lengths.max())
    occ2 = np.zeros((12, width), dtype=np.uint8)
    for r, ln in enumerate(lengths):
        occ2[r, :ln] = (gen.random(ln) < 0.5).astype(np.uint8)
    stepped = kb.fssep_step_batch(occ2, lengths, keys, 4)
    for r, ln in enumerate(lengths):
        single = kb.fssep_step(occ2[r, :ln].copy(), keys[r], 4)
        assert np.array_equal(stepped[r, :ln], single)
        assert not stepped[r, ln:].any()


def test_conflict_coin_is_fair_and_site_keyed():
    # 11011: the center hole is attacked from both sides; outcomes split evenly
    occ = np.array([1, 1, 0, 1, 1], dtype=np.uint8)
    key = RngContext(0).ukey
    outs = set()
    lefts = 0
    for t in range(4000):
        out = kb.fssep_step(occ, key, t)
        s = "".join(map(str, out))
        outs.add(s)
        lefts += s == "10111"
    assert outs == {"10111", "11101"}
    assert abs(lefts / 4000 - 0.5) < 0.03


def test_deterministic_step_examples():
    key = RngContext(1).ukey
    out = kb.fssep_step(np.array([1, 1, 0, 0, 1, 1, 0, 0], dtype=np.uint8), key, 0)
    assert "".join(map(str, out)) == "00110011"
    out = kb.fssep_step(np.array([1, 0, 1, 0, 1, 0, 1, 0], dtype=np.uint8), key, 0)
    assert "".join(map(str, out)) == "10101010"
    h = kb.ssm_step(np.array([2, 0, 2, 0], dtype=np.int64), key, 0)
    assert list(h) == [0, 2, 0, 2]
    h = kb.ssm_step(np.array([1, 1, 1], dtype=np.int64), key, 0)
    assert list(h) == [1, 1, 1]


def test_tall_tall_coin_fair():
    h = np.array([2, 2, 1, 1], dtype=np.int64)
    key = RngContext(2).ukey
    outs = set()
    for t in range(4000):
        outs.add(tuple(kb.ssm_step(h, key, t)))
    assert outs == {(0, 2, 2, 2), (2, 0, 2, 2)}


def test_member_class_detects_both_words():
    assert kb.member_class(np.array([1, 1, 0, 0, 1, 1, 0, 0], dtype=np.uint8)) == 3
    assert kb.member_class(np.array([1, 0, 1, 0], dtype=np.uint8)) == 3
    assert kb.member_class(np.array([1, 1, 0, 0, 1, 0], dtype=np.uint8)) == 1
    assert kb.member_class(np.array([0, 1, 0, 0, 1, 1], dtype=np.uint8)) == 2
    assert kb.member_class(np.array([1, 1, 0, 1, 0, 0, 1, 0], dtype=np.uint8)) == 0
