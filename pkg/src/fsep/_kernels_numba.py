"""Numba kernels; bit-identical to the numpy reference backend.

The freezing-run kernel keeps an active frontier instead of sweeping the
whole ring: after a synchronous step, new movers can only appear within
one site of something that changed, so the work per step shrinks with the
activity.  Coins are keyed by absolute site index, so frontier order does
not affect trajectories.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .rng import MIX_C1, MIX_C2, STEP_MUL, IDX_MUL

BACKEND_NAME = "numba"

_C1 = np.uint64(MIX_C1)
_C2 = np.uint64(MIX_C2)
_SM = np.uint64(STEP_MUL)
_IM = np.uint64(IDX_MUL)
_ONE = np.uint64(1)
_U53 = 1.0 / (1 << 53)


@njit(cache=True, inline="always")
def _mix64(x):
    x = x ^ (x >> np.uint64(30))
    x = x * _C1
    x = x ^ (x >> np.uint64(27))
    x = x * _C2
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _step_key(key, step):
    # key may arrive typed int64; shifts must be logical, so force uint64
    return _mix64(np.uint64(key) ^ ((np.uint64(step) + _ONE) * _SM))


@njit(cache=True, inline="always")
def _site_hash(sk, idx):
    return _mix64(((np.uint64(idx) + _ONE) * _IM) ^ sk)


@njit(cache=True, inline="always")
def _site_bit(sk, idx):
    return (_site_hash(sk, idx) >> np.uint64(63)) != np.uint64(0)


@njit(cache=True, inline="always")
def _site_u01(sk, idx):
    return np.float64(_site_hash(sk, idx) >> np.uint64(11)) * _U53


# ---------------------------------------------------------------------------
# exclusion


@njit(cache=True)
def _fssep_dirs(occ, dirs):
    M = occ.shape[0]
    n = 0
    for i in range(M):
        d = 0
        if occ[i] == 1:
            l = occ[(i - 1) % M]
            r = occ[(i + 1) % M]
            if l + r == 1:
                d = 1 if l == 1 else -1
                n += 1
        dirs[i] = d
    return n


@njit(cache=True)
def fssep_step(occ, key, step):
    M = occ.shape[0]
    dirs = np.empty(M, dtype=np.int8)
    _fssep_dirs(occ, dirs)
    out = occ.copy()
    sk = _step_key(key, step)
    for j in range(M):
        afl = dirs[(j - 1) % M] == 1
        afr = dirs[(j + 1) % M] == -1
        if afl or afr:
            if afl and afr:
                win_left = _site_bit(sk, j)
            else:
                win_left = afl
            out[j] = 1
            if win_left:
                out[(j - 1) % M] = 0
            else:
                out[(j + 1) % M] = 0
    return out


@njit(cache=True)
def mover_count(occ):
    M = occ.shape[0]
    n = 0
    for i in range(M):
        if occ[i] == 1 and occ[(i - 1) % M] + occ[(i + 1) % M] == 1:
            n += 1
    return n


@njit(cache=True)
def fssep_run(occ, key, t0, nsteps):
    out = occ.copy()
    for t in range(t0, t0 + nsteps):
        out = fssep_step(out, key, t)
    return out


@njit(cache=True)
def fssep_until_frozen(occ, key, t0, max_steps):
    M = occ.shape[0]
    out = occ.copy()
    cand = np.empty(M, dtype=np.int64)
    nxt = np.empty(M, dtype=np.int64)
    srcs = np.empty(M, dtype=np.int64)
    dsts = np.empty(M, dtype=np.int64)
    seen = np.full(M, -1, dtype=np.int64)
    ncand = M
    for i in range(M):
        cand[i] = i
    for t in range(t0, t0 + max_steps):
        sk = _step_key(key, t)
        nmoves = 0
        for c in range(ncand):
            i = cand[c]
            if out[i] != 1:
                continue
            l = out[(i - 1) % M]
            r = out[(i + 1) % M]
            if l + r != 1:
                continue
            if l == 1:
                j = (i + 1) % M
                opp = (j + 1) % M
                conflict = out[opp] == 1 and out[(opp + 1) % M] == 1
                win = (not conflict) or _site_bit(sk, j)
            else:
                j = (i - 1) % M
                opp = (j - 1) % M
                conflict = out[opp] == 1 and out[(opp - 1) % M] == 1
                win = (not conflict) or (not _site_bit(sk, j))
            if win:
                srcs[nmoves] = i
                dsts[nmoves] = j
                nmoves += 1
        if nmoves == 0:
            return out, t - t0
        for k in range(nmoves):
            out[srcs[k]] = 0
            out[dsts[k]] = 1
        nn = 0
        for k in range(nmoves):
            for d in (-1, 0, 1):
                for base in (srcs[k], dsts[k]):
                    s = (base + d) % M
                    if seen[s] != t:
                        seen[s] = t
                        nxt[nn] = s
                        nn += 1
        ncand = nn
        tmp = cand
        cand = nxt
        nxt = tmp
    if mover_count(out) == 0:
        return out, max_steps
    return out, -1


@njit(cache=True)
def _parse_left(occ):
    M = occ.shape[0]
    if M == 0 or M % 2 != 0:
        return False
    start = -1
    for p in range(M):
        if occ[p] == 1 and occ[(p - 1) % M] == 0:
            start = p
            break
    if start < 0:
        return False
    pos = start
    done = 0
    while done < M:
        if occ[pos] != 1:
            return False
        if occ[(pos + 1) % M] == 0:
            pos = (pos + 2) % M
            done += 2
        elif occ[(pos + 2) % M] == 0 and occ[(pos + 3) % M] == 0:
            pos = (pos + 4) % M
            done += 4
        else:
            return False
    return done == M


@njit(cache=True)
def _parse_right(occ):
    M = occ.shape[0]
    if M == 0 or M % 2 != 0:
        return False
    start = -1
    for p in range(M):
        if occ[p] == 0 and occ[(p - 1) % M] == 1:
            start = p
            break
    if start < 0:
        return False
    pos = start
    done = 0
    while done < M:
        if occ[pos] != 0:
            return False
        if occ[(pos + 1) % M] == 1:
            pos = (pos + 2) % M
            done += 2
        elif occ[(pos + 2) % M] == 1 and occ[(pos + 3) % M] == 1:
            pos = (pos + 4) % M
            done += 4
        else:
            return False
    return done == M


@njit(cache=True)
def member_class(occ):
    cls = 0
    if _parse_left(occ):
        cls |= 1
    if _parse_right(occ):
        cls |= 2
    return cls


@njit(cache=True)
def fssep_until_member(occ, key, t0, max_steps):
    out = occ.copy()
    cls = member_class(out)
    if cls != 0:
        return out, 0, cls
    for t in range(t0, t0 + max_steps):
        out = fssep_step(out, key, t)
        cls = member_class(out)
        if cls != 0:
            return out, t - t0 + 1, cls
    return out, -1, 0


# ---------------------------------------------------------------------------
# stacks


@njit(cache=True)
def ssm_step(h, key, step):
    M = h.shape[0]
    sk = _step_key(key, step)
    out = h.copy()
    for b in range(M):
        tl = h[b] >= 2
        tr = h[(b + 1) % M] >= 2
        if tl and tr:
            if _site_bit(sk, b):
                out[b] -= 1
                out[(b + 1) % M] += 1
            else:
                out[b] += 1
                out[(b + 1) % M] -= 1
        elif tl:
            out[b] -= 1
            out[(b + 1) % M] += 1
        elif tr:
            out[b] += 1
            out[(b + 1) % M] -= 1
    return out


@njit(cache=True)
def ssm_run(h, key, t0, nsteps):
    out = h.copy()
    for t in range(t0, t0 + nsteps):
        out = ssm_step(out, key, t)
    return out


@njit(cache=True)
def ssm_run_checked(h, key, t0, nsteps):
    M = h.shape[0]
    par = np.empty(M, dtype=np.int64)
    for i in range(M):
        par[i] = h[i] % 2
    out = h.copy()
    bad_short = -1
    bad_parity = -1
    for t in range(t0, t0 + nsteps):
        out = ssm_step(out, key, t)
        k = t - t0 + 1
        if bad_short < 0:
            for i in range(M):
                if out[i] <= 1 and out[(i + 1) % M] <= 1:
                    bad_short = k
                    break
        if bad_parity < 0:
            for i in range(M):
                if out[i] % 2 != par[i]:
                    bad_parity = k
                    break
        if bad_short >= 0 and bad_parity >= 0:
            break
    return out, bad_short, bad_parity


# ---------------------------------------------------------------------------
# batches


@njit(cache=True)
def ssm_step_batch(h2d, keys, step):
    R, M = h2d.shape
    out = h2d.copy()
    for r in range(R):
        sk = _step_key(keys[r], step)
        for b in range(M):
            tl = h2d[r, b] >= 2
            tr = h2d[r, (b + 1) % M] >= 2
            if tl and tr:
                if _site_bit(sk, b):
                    out[r, b] -= 1
                    out[r, (b + 1) % M] += 1
                else:
                    out[r, b] += 1
                    out[r, (b + 1) % M] -= 1
            elif tl:
                out[r, b] -= 1
                out[r, (b + 1) % M] += 1
            elif tr:
                out[r, b] += 1
                out[r, (b + 1) % M] -= 1
    return out


@njit(cache=True)
def fssep_step_batch(occ2d, lengths, keys, step):
    R, W = occ2d.shape
    out = occ2d.copy()
    dirs = np.empty(W, dtype=np.int8)
    for r in range(R):
        M = lengths[r]
        sk = _step_key(keys[r], step)
        for i in range(M):
            d = 0
            if occ2d[r, i] == 1:
                l = occ2d[r, (i - 1) % M]
                rr = occ2d[r, (i + 1) % M]
                if l + rr == 1:
                    d = 1 if l == 1 else -1
            dirs[i] = d
        for j in range(M):
            afl = dirs[(j - 1) % M] == 1
            afr = dirs[(j + 1) % M] == -1
            if afl or afr:
                if afl and afr:
                    win_left = _site_bit(sk, j)
                else:
                    win_left = afl
                out[r, j] = 1
                if win_left:
                    out[r, (j - 1) % M] = 0
                else:
                    out[r, (j + 1) % M] = 0
    return out


@njit(cache=True)
def phi_apply_batch(h2d):
    """Code every stack ring as 0 1^n words; returns (padded images, lengths)."""
    B, M = h2d.shape
    lengths = np.empty(B, dtype=np.int64)
    kmax = 0
    for r in range(B):
        s = M
        for i in range(M):
            s += h2d[r, i]
        lengths[r] = s
        if s > kmax:
            kmax = s
    img = np.zeros((B, kmax), dtype=np.uint8)
    for r in range(B):
        p = 0
        for i in range(M):
            img[r, p] = 0
            p += 1
            for _ in range(h2d[r, i]):
                img[r, p] = 1
                p += 1
    return img, lengths


@njit(cache=True)
def rotate_batch(a2d, lengths, shifts):
    """Per-ring cyclic shift, rotate(c, q)[i] = c[(i - q) % L]; padding zeroed."""
    B, W = a2d.shape
    out = np.zeros_like(a2d)
    for r in range(B):
        L = lengths[r]
        q = shifts[r] % L
        for i in range(L):
            out[r, i] = a2d[r, (i - q) % L]
    return out


@njit(cache=True)
def gibbs_pattern_batch(powtab, keys):
    M = powtab.shape[0] - 1
    R = keys.shape[0]
    y = np.zeros((R, M), dtype=np.uint8)
    w_full = powtab[M]
    p_first = w_full[1, 1] / (w_full[0, 0] + w_full[1, 1])
    for r in range(R):
        sk = _step_key(keys[r], 0)
        if _site_u01(sk, 0) < p_first:
            y[r, 0] = 1
        y0 = y[r, 0]
        for k in range(1, M):
            a = y[r, k - 1]
            num1 = powtab[1][a, 1] * powtab[M - k][1, y0]
            num0 = powtab[1][a, 0] * powtab[M - k][0, y0]
            pk = num1 / (num0 + num1)
            if _site_u01(sk, k) < pk:
                y[r, k] = 1
    return y
