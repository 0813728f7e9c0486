"""Pure-numpy reference kernels.

Both backends implement the same contract with bit-identical output:
all coins come from the keyed hash in `rng`, so a trajectory depends only
on (key, step, site/bond index), never on scan order.

Update conventions (shared, frozen):
  exclusion step: a particle with exactly one occupied neighbour targets
    its empty neighbour; when two particles target the same empty site j,
    the coin bit(key, step, j) == 1 sends the LEFT attacker (site j-1).
  stack step: bond b joins sites b and b+1; a bond with one tall (>=2)
    end moves one particle tall -> short; with two tall ends the coin
    bit(key, step, b) == 1 moves a particle RIGHT (b -> b+1).
"""

from __future__ import annotations

import numpy as np

from .rng import bit_array, bit, step_key, IDX_MUL, MIX_C1, MIX_C2

BACKEND_NAME = "numpy"


def _coins(key: int, step: int, n: int) -> np.ndarray:
    return bit_array(key, step, np.arange(n, dtype=np.uint64))


# ---------------------------------------------------------------------------
# exclusion (synchronous facilitated dynamics)


def fssep_step(occ: np.ndarray, key: int, step: int) -> np.ndarray:
    o = occ.astype(bool)
    left = np.roll(o, 1)
    right = np.roll(o, -1)
    mover = o & (left ^ right)
    to_right = mover & left          # empty neighbour is on the right
    to_left = mover & right
    from_left = np.roll(to_right, 1)   # attacker arriving at j from j-1
    from_right = np.roll(to_left, -1)  # attacker arriving at j from j+1
    coin = _coins(key, step, o.size)
    win_left = from_left & (coin | ~from_right)
    win_right = from_right & (~coin | ~from_left)
    arrive = win_left | win_right
    depart = (to_right & np.roll(win_left, -1)) | (to_left & np.roll(win_right, 1))
    return ((o & ~depart) | arrive).astype(np.uint8)


def mover_count(occ: np.ndarray) -> int:
    o = occ.astype(bool)
    return int((o & (np.roll(o, 1) ^ np.roll(o, -1))).sum())


def fssep_run(occ: np.ndarray, key: int, t0: int, nsteps: int) -> np.ndarray:
    out = occ.copy()
    for t in range(t0, t0 + nsteps):
        out = fssep_step(out, key, t)
    return out


def fssep_until_frozen(occ, key, t0, max_steps):
    """Evolve until no particle can move; returns (config, steps taken or -1)."""
    out = occ.copy()
    for t in range(t0, t0 + max_steps):
        if mover_count(out) == 0:
            return out, t - t0
        out = fssep_step(out, key, t)
    if mover_count(out) == 0:
        return out, max_steps
    return out, -1


# cyclic parse membership; word sets {1100, 10} (left) and {0011, 01} (right)


def _parse_left(occ: np.ndarray) -> bool:
    M = occ.size
    if M == 0 or M % 2 != 0:
        return False
    o = occ
    start = -1
    for p in range(M):
        if o[p] == 1 and o[(p - 1) % M] == 0:
            start = p
            break
    if start < 0:
        return False
    pos = start
    done = 0
    while done < M:
        if o[pos] != 1:
            return False
        nxt = (pos + 1) % M
        if o[nxt] == 0:
            pos = (pos + 2) % M
            done += 2
        elif o[(pos + 2) % M] == 0 and o[(pos + 3) % M] == 0:
            pos = (pos + 4) % M
            done += 4
        else:
            return False
    return done == M


def _parse_right(occ: np.ndarray) -> bool:
    M = occ.size
    if M == 0 or M % 2 != 0:
        return False
    o = occ
    start = -1
    for p in range(M):
        if o[p] == 0 and o[(p - 1) % M] == 1:
            start = p
            break
    if start < 0:
        return False
    pos = start
    done = 0
    while done < M:
        if o[pos] != 0:
            return False
        nxt = (pos + 1) % M
        if o[nxt] == 1:
            pos = (pos + 2) % M
            done += 2
        elif o[(pos + 2) % M] == 1 and o[(pos + 3) % M] == 1:
            pos = (pos + 4) % M
            done += 4
        else:
            return False
    return done == M


def member_class(occ: np.ndarray) -> int:
    """0 = neither, 1 = left-parseable, 2 = right-parseable, 3 = both."""
    return (1 if _parse_left(occ) else 0) | (2 if _parse_right(occ) else 0)


def fssep_until_member(occ, key, t0, max_steps):
    """Evolve until the cyclic parse succeeds; (config, steps or -1, class)."""
    out = occ.copy()
    cls = member_class(out)
    if cls:
        return out, 0, cls
    for t in range(t0, t0 + max_steps):
        out = fssep_step(out, key, t)
        cls = member_class(out)
        if cls:
            return out, t - t0 + 1, cls
    return out, -1, 0


# ---------------------------------------------------------------------------
# stacks (synchronous stack dynamics)


def ssm_step(h: np.ndarray, key: int, step: int) -> np.ndarray:
    tall = h >= 2
    tall_r = np.roll(tall, -1)      # tall[b+1] seen from bond b
    both = tall & tall_r
    coin = _coins(key, step, h.size)
    dir_right = (tall & ~tall_r) | (both & coin)
    dir_left = (~tall & tall_r) | (both & ~coin)
    outflow = dir_right.astype(np.int64) + np.roll(dir_left, 1).astype(np.int64)
    inflow = np.roll(dir_right, 1).astype(np.int64) + dir_left.astype(np.int64)
    return h + inflow - outflow


def ssm_run(h: np.ndarray, key: int, t0: int, nsteps: int) -> np.ndarray:
    out = h.copy()
    for t in range(t0, t0 + nsteps):
        out = ssm_step(out, key, t)
    return out


def ssm_run_checked(h, key, t0, nsteps):
    """Run while watching the short-stack spacing and per-site parity.

    Returns (final, first step with adjacent shorts, first step with a
    parity change); -1 where the violation never happened.
    """
    par = h % 2
    out = h.copy()
    bad_short = -1
    bad_parity = -1
    for t in range(t0, t0 + nsteps):
        out = ssm_step(out, key, t)
        k = t - t0 + 1
        if bad_short < 0:
            short = out <= 1
            if bool((short & np.roll(short, -1)).any()):
                bad_short = k
        if bad_parity < 0 and bool(((out % 2) != par).any()):
            bad_parity = k
        if bad_short >= 0 and bad_parity >= 0:
            break
    return out, bad_short, bad_parity


# ---------------------------------------------------------------------------
# batches (independent rings, one key per ring)


def _batch_hash(keys_stepped: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # keys_stepped: (R,) uint64 already mixed with the step slot
    x = (idx.astype(np.uint64) + np.uint64(1)) * np.uint64(IDX_MUL)
    x = x ^ keys_stepped[:, None]
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(MIX_C1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(MIX_C2)
    return x ^ (x >> np.uint64(31))


def _batch_coins(keys, step: int, n: int) -> np.ndarray:
    ks = np.array([step_key(int(k), step) for k in keys], dtype=np.uint64)
    idx = np.broadcast_to(np.arange(n, dtype=np.uint64), (len(keys), n))
    return (_batch_hash(ks, idx) >> np.uint64(63)).astype(bool)


def _batch_uniforms(keys, step: int, n: int) -> np.ndarray:
    ks = np.array([step_key(int(k), step) for k in keys], dtype=np.uint64)
    idx = np.broadcast_to(np.arange(n, dtype=np.uint64), (len(keys), n))
    h = _batch_hash(ks, idx)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def ssm_step_batch(h2d: np.ndarray, keys: np.ndarray, step: int) -> np.ndarray:
    R, M = h2d.shape
    tall = h2d >= 2
    tall_r = np.roll(tall, -1, axis=1)
    both = tall & tall_r
    coin = _batch_coins(keys, step, M)
    dir_right = (tall & ~tall_r) | (both & coin)
    dir_left = (~tall & tall_r) | (both & ~coin)
    outflow = dir_right.astype(np.int64) + np.roll(dir_left, 1, axis=1).astype(np.int64)
    inflow = np.roll(dir_right, 1, axis=1).astype(np.int64) + dir_left.astype(np.int64)
    return h2d + inflow - outflow


def fssep_step_batch(occ2d: np.ndarray, lengths: np.ndarray, keys: np.ndarray, step: int) -> np.ndarray:
    """Synchronous step on R rings of varying length, padded to a common width."""
    R, W = occ2d.shape
    cols = np.arange(W, dtype=np.int64)[None, :]
    L = lengths[:, None]
    valid = cols < L
    li = (cols - 1) % L
    ri = (cols + 1) % L
    rows = np.arange(R)[:, None]
    o = occ2d.astype(bool) & valid
    left = o[rows, li] & valid
    right = o[rows, ri] & valid
    mover = o & (left ^ right)
    to_right = mover & left
    to_left = mover & right
    from_left = to_right[rows, li] & valid    # attacker at j-1 (cyclic gather)
    from_right = to_left[rows, ri] & valid
    coin = _batch_coins(keys, step, W)
    win_left = from_left & (coin | ~from_right)
    win_right = from_right & (~coin | ~from_left)
    arrive = win_left | win_right
    depart = (to_right & win_left[rows, ri]) | (to_left & win_right[rows, li])
    return (((o & ~depart) | arrive) & valid).astype(np.uint8)


def phi_apply_batch(h2d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Code every stack ring as 0 1^n words; returns (padded images, lengths)."""
    B, M = h2d.shape
    lengths = M + h2d.sum(axis=1, dtype=np.int64)
    kmax = int(lengths.max())
    img = np.zeros((B, kmax), dtype=np.uint8)
    cols = np.arange(kmax, dtype=np.int64)[None, :]
    img[cols < lengths[:, None]] = 1
    before = np.zeros((B, M), dtype=np.int64)
    np.cumsum(h2d[:, :-1], axis=1, out=before[:, 1:])
    zpos = np.arange(M, dtype=np.int64)[None, :] + before
    img[np.arange(B)[:, None], zpos] = 0
    return img, lengths


def rotate_batch(a2d: np.ndarray, lengths: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Per-ring cyclic shift, rotate(c, q)[i] = c[(i - q) % L]; padding zeroed."""
    B, W = a2d.shape
    cols = np.arange(W, dtype=np.int64)[None, :]
    L = lengths[:, None]
    idx = (cols - shifts[:, None]) % L
    out = a2d[np.arange(B)[:, None], idx]
    out[cols >= L] = 0
    return out


def gibbs_pattern_batch(powtab: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Sample hole/occupied ring patterns from cached 2x2 transfer powers.

    powtab[m] is W^m (normalized); backward conditional sampling around the
    ring, uniforms keyed (ring key, step 0, site).  Exact ring law.
    """
    M = powtab.shape[0] - 1
    R = len(keys)
    u = _batch_uniforms(keys, 0, M)
    y = np.zeros((R, M), dtype=np.uint8)
    w_full = powtab[M]
    p1 = w_full[1, 1] / (w_full[0, 0] + w_full[1, 1])
    y[:, 0] = u[:, 0] < p1
    W = powtab[1]
    for k in range(1, M):
        rem = powtab[M - k]
        a = y[:, k - 1].astype(np.int64)
        y0 = y[:, 0].astype(np.int64)
        num1 = W[a, 1] * rem[1, y0]
        num0 = W[a, 0] * rem[0, y0]
        pk = num1 / (num0 + num1)
        y[:, k] = u[:, k] < pk
    return y
