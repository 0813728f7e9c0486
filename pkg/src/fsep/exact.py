"""Exact stationary analysis of the even stack sector.

Two complementary tools: (i) canonical finite rings — enumerate every
even-height, no-adjacent-zero configuration at fixed particle number,
build the exact one-step transition matrix by summing over direction
choices on tall-tall bonds, and check the 2^(-2z) stationary law and
detailed balance; (ii) the infinite-volume grand-canonical measure at
fugacity zeta, evaluated through a rank-2 transfer operator with
closed-form eigenvalues.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

__all__ = [
    "FiniteMarkovModel",
    "StationaryResult",
    "TransferSpec",
    "enumerate_even_ring",
    "transition_matrix",
    "stationary_and_detailed_balance",
    "transfer_spec",
    "site_marginal",
    "density",
    "fugacity_of_density",
    "cylinder_prob",
    "ring_cylinder_prob",
    "EnumeratedRingProb",
    "ring_word_prob_enumerated",
]


# ---------------------------------------------------------------------------
# canonical rings


def enumerate_even_ring(M: int, N: int, cap: int = 250_000) -> np.ndarray:
    """All rings of M sites, even heights summing to N, no adjacent zeros.

    M must be odd >= 3 and N even >= M+1 (below that the no-adjacent-zero
    constraint is unsatisfiable).  Rows in lexicographic order.
    """
    if M < 3 or M % 2 == 0:
        raise ValueError("M must be odd and >= 3")
    if N % 2 != 0:
        raise ValueError(f"N must be even, got {N}")
    if N < M + 1:
        raise ValueError(f"N must be >= M+1 = {M + 1}")
    half = N // 2
    out: list[tuple[int, ...]] = []
    cur = [0] * M

    def rec(pos: int, rem: int) -> None:
        if pos == M - 1:
            # last site closes the ring against both neighbours
            if rem == 0 and (cur[M - 2] == 0 or cur[0] == 0):
                return
            cur[pos] = rem
            out.append(tuple(2 * c for c in cur))
            if len(out) > cap:
                raise RuntimeError(f"more than {cap} states")
            return
        lo = 0
        if pos > 0 and cur[pos - 1] == 0:
            lo = 1
        for c in range(lo, rem + 1):
            cur[pos] = c
            rec(pos + 1, rem - c)

    rec(0, half)
    return np.asarray(out, dtype=np.int64)


def _bond_kinds(h: np.ndarray) -> tuple[list[int], list[int]]:
    """Forced per-bond moves (+1 right, -1 left, 0 idle) and free bonds."""
    M = h.size
    forced = [0] * M
    free: list[int] = []
    for b in range(M):
        l, r = h[b], h[(b + 1) % M]
        lt, rt = l >= 2, r >= 2
        if lt and rt:
            free.append(b)
        elif lt:
            forced[b] = 1
        elif rt:
            forced[b] = -1
    return forced, free


def _apply_moves(h: np.ndarray, dirs: list[int]) -> tuple[int, ...]:
    out = h.copy()
    M = h.size
    for b, d in enumerate(dirs):
        if d == 1:
            out[b] -= 1
            out[(b + 1) % M] += 1
        elif d == -1:
            out[(b + 1) % M] -= 1
            out[b] += 1
    return tuple(int(x) for x in out)


@dataclass(frozen=True)
class FiniteMarkovModel:
    states: np.ndarray            # (S, M) heights
    trans: sp.csr_matrix          # (S, S) one-step probabilities
    nzeros: np.ndarray            # z(state)

    @property
    def nstates(self) -> int:
        return self.states.shape[0]


def transition_matrix(states: np.ndarray) -> FiniteMarkovModel:
    """Exact kernel by enumerating the 2^f direction choices per state."""
    S, M = states.shape
    index = {tuple(int(x) for x in row): i for i, row in enumerate(states)}
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i in range(S):
        h = states[i]
        forced, free = _bond_kinds(h)
        f = len(free)
        weight = 2.0 ** (-f)
        hits: dict[tuple[int, ...], int] = {}
        for signs in itertools.product((1, -1), repeat=f):
            dirs = forced.copy()
            for b, s in zip(free, signs):
                dirs[b] = s
            nxt = _apply_moves(h, dirs)
            hits[nxt] = hits.get(nxt, 0) + 1
        for nxt, c in hits.items():
            j = index.get(nxt)
            if j is None:
                raise RuntimeError(f"left the even sector: {h} -> {nxt}")
            rows.append(i)
            cols.append(j)
            vals.append(c * weight)
    trans = sp.csr_matrix((vals, (rows, cols)), shape=(S, S))
    nzeros = (states == 0).sum(axis=1).astype(np.int64)
    return FiniteMarkovModel(states, trans, nzeros)


@dataclass(frozen=True)
class StationaryResult:
    pi: np.ndarray
    pi_closed: np.ndarray
    residual_db: float            # detailed balance under the closed form
    residual_closed: float        # |pi_solved - pi_closed| max
    residual_stationary: float    # |pi P - pi| max
    irreducible: bool


_DENSE_SOLVE_CAP = 20_000


def _solve_stationary(P: sp.csr_matrix) -> np.ndarray:
    S = P.shape[0]
    if S <= _DENSE_SOLVE_CAP:
        A = P.toarray().T - np.eye(S)
        A[-1, :] = 1.0
        b = np.zeros(S)
        b[-1] = 1.0
        return np.linalg.solve(A, b)
    x = np.full(S, 1.0 / S)
    PT = P.T.tocsr()
    for _ in range(1_000_000):
        y = PT @ x
        y /= y.sum()
        if np.abs(y - x).max() < 1e-12:
            return y
        x = y
    raise RuntimeError("power iteration did not converge")


def stationary_and_detailed_balance(model: FiniteMarkovModel) -> StationaryResult:
    pi = _solve_stationary(model.trans)
    w = 4.0 ** (-model.nzeros.astype(np.float64))
    pi_closed = w / w.sum()
    flux = model.trans.multiply(pi_closed[:, None]).tocsr()
    residual_db = float(np.abs((flux - flux.T).toarray()).max())
    residual_closed = float(np.abs(pi - pi_closed).max())
    residual_stationary = float(np.abs(model.trans.T @ pi - pi).max())
    ncomp, _ = connected_components(model.trans, directed=True, connection="strong")
    return StationaryResult(
        pi, pi_closed, residual_db, residual_closed, residual_stationary, ncomp == 1
    )


# ---------------------------------------------------------------------------
# infinite-volume transfer operator


@dataclass(frozen=True)
class TransferSpec:
    zeta: float
    hmax: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    tmat: np.ndarray
    lambda1: float
    lambda2: float


def transfer_spec(zeta: float, hmax: int | None = None) -> TransferSpec:
    """Rank-2 transfer operator on even heights 0..hmax at fugacity zeta."""
    if not 0.0 < zeta < 1.0:
        raise ValueError(
            "zeta must lie in (0,1); the zeta=0 endpoint is the frozen "
            "period-4 pattern handled by the sampler"
        )
    if hmax is None:
        hmax = max(64, 2 * math.ceil(math.log(1e-13) / math.log(zeta) / 2))
    if hmax < 10 or hmax % 2 != 0:
        raise ValueError("hmax must be even and >= 10")
    n = hmax // 2 + 1
    u = np.zeros(n)
    u[0] = 1.0
    v = zeta ** np.arange(n, dtype=np.float64)
    v[0] = 0.0
    tmat = 0.5 * (np.outer(u, v) + np.outer(v, u)) + np.outer(v, v)
    w = (zeta / (1.0 + zeta)) * u + v
    lambda1 = zeta / (2.0 * (1.0 - zeta))
    lambda2 = -zeta / (2.0 * (1.0 + zeta))
    return TransferSpec(zeta, hmax, u, v, w, tmat, lambda1, lambda2)


def site_marginal(spec: TransferSpec) -> np.ndarray:
    """P(height = 2i), i = 0..hmax/2; P(0) = (1-zeta)/2."""
    z = spec.zeta
    n = spec.hmax // 2 + 1
    p = np.empty(n)
    p[0] = (1.0 - z) / 2.0
    i = np.arange(1, n, dtype=np.float64)
    p[1:] = 0.5 * (1.0 + z) ** 2 * (1.0 - z) * z ** (2.0 * i - 2.0)
    return p


def density(zeta: float) -> float:
    """Mean height 1/(1-zeta) of the grand-canonical measure."""
    if not 0.0 <= zeta < 1.0:
        raise ValueError("zeta must lie in [0,1)")
    return 1.0 / (1.0 - zeta)


def fugacity_of_density(rho_e: float) -> float:
    """Inverse of ``density``; rho_e = 1 maps to the frozen endpoint 0."""
    if rho_e < 1.0:
        raise ValueError("even-sector density must be >= 1")
    return (rho_e - 1.0) / rho_e


def _word_indices(spec: TransferSpec, heights) -> np.ndarray:
    arr = np.asarray(heights, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("height word must be a nonempty 1-d sequence")
    if (arr < 0).any() or (arr % 2 != 0).any():
        raise ValueError("heights must be even and nonnegative")
    if (arr > spec.hmax).any():
        raise ValueError(f"height exceeds hmax={spec.hmax}")
    return arr // 2


def cylinder_prob(spec: TransferSpec, heights) -> float:
    """Probability that sites 0..len-1 carry the given even heights.

    w_(i1) T_(i1 i2) ... T_(i_(l-1) i_l) w_(il) / (lambda1^(l-1) |w|^2);
    exact under marginalization because T w = lambda1 w.
    """
    idx = _word_indices(spec, heights)
    val = spec.w[idx[0]]
    for a, b in zip(idx[:-1], idx[1:]):
        val *= spec.tmat[a, b]
    val *= spec.w[idx[-1]]
    norm = spec.lambda1 ** (idx.size - 1) * float(spec.w @ spec.w)
    return float(val / norm)


def ring_cylinder_prob(spec: TransferSpec, heights, M: int) -> float:
    """Same word on a finite ring of M sites (grand-canonical weight)."""
    idx = _word_indices(spec, heights)
    ell = idx.size
    if M < ell:
        raise ValueError("ring shorter than the word")
    val = 1.0
    for a, b in zip(idx[:-1], idx[1:]):
        val *= spec.tmat[a, b]
    rest = np.linalg.matrix_power(spec.tmat, M - ell + 1)
    val *= rest[idx[-1], idx[0]]
    return float(val / np.trace(np.linalg.matrix_power(spec.tmat, M)))


@dataclass(frozen=True)
class EnumeratedRingProb:
    prob: float
    xi: float                 # partition sum actually accumulated
    neglected: float          # upper bound on pruned weight


def ring_word_prob_enumerated(
    zeta: float, M: int, heights, eps: float = 1e-18
) -> EnumeratedRingProb:
    """Direct-sum oracle for ``ring_cylinder_prob``.

    Enumerates configurations weighted zeta^N 4^(-z) by depth-first
    search, pruning branches whose total remaining mass is provably
    below ``eps`` times a lower bound on the partition sum.  No
    transfer matrix involved.
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0,1)")
    if M < 3 or M % 2 == 0:
        raise ValueError("M must be odd and >= 3")
    word = np.asarray(heights, dtype=np.int64)
    if (word < 0).any() or (word % 2 != 0).any():
        raise ValueError("heights must be even and nonnegative")
    ell = word.size
    if not 0 < ell <= M:
        raise ValueError("word length must be in 1..M")
    # partition-sum lower bound: any minimal-N state
    xi_floor = zeta ** (M + 1) * 2.0 ** (-(M - 1))
    cut = eps * xi_floor
    gfun = 1.0 / (1.0 - zeta * zeta)   # per remaining site mass bound
    fixed = {i: int(word[i]) for i in range(ell)}
    neglected = 0.0

    def dfs(restrict: bool) -> float:
        nonlocal neglected
        total = 0.0

        def rec(pos: int, wgt: float, h0: int, hp: int) -> None:
            nonlocal total, neglected
            if pos == M:
                if not (hp == 0 and h0 == 0):
                    total += wgt
                return
            rest = M - pos - 1
            if restrict and pos < ell:
                h = fixed[pos]
                if h == 0 and hp == 0:
                    return
                w2 = wgt * (0.25 if h == 0 else zeta**h)
                if w2 * gfun**rest < cut:
                    neglected += w2 * gfun**rest
                    return
                rec(pos + 1, w2, h if pos == 0 else h0, h)
                return
            h = 0
            while True:
                if not (h == 0 and hp == 0):
                    w2 = wgt * (0.25 if h == 0 else zeta**h)
                    if w2 * gfun**rest >= cut:
                        rec(pos + 1, w2, h if pos == 0 else h0, h)
                    elif h > 0:
                        # taller heights only shrink; bound the whole tail
                        neglected += w2 * gfun**rest / (1.0 - zeta * zeta)
                        return
                h += 2

        rec(0, 1.0, -1, -1)
        return total

    xi = dfs(False)
    num = dfs(True)
    return EnumeratedRingProb(num / xi, xi, neglected)
