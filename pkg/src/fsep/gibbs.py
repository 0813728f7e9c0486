"""Direct stack samplers: even-sector Gibbs rings and parity shifts.

``sample_even_gibbs`` draws exact finite-ring samples of the
grand-canonical even-sector measure (weight zeta^N 4^(-z), no adjacent
zeros) in two phases: the zero/occupied pattern comes from backward
conditional sampling of a 2x2 transfer chain, then occupied sites get
independent even heights P(2i) = (1-zeta^2) zeta^(2i-2).  The
zeta-to-even-density map is rho_e = 1/(1-zeta).

``sample_etis`` adds an independent parity ring on top (heights
m + sigma), covering the translation-invariant stationary family at
density rho_e + kappa; ``basic_state_sample`` builds the locked
period-2 composites whose even translates stay stationary without
being translation invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .backend import kernels
from .exact import fugacity_of_density
from .lattice import minimal_period, rotate
from .rng import RngContext, child_key_array, uniform_grid

__all__ = [
    "ParitySource",
    "sample_even_gibbs",
    "sample_even_gibbs_batch",
    "sample_etis",
    "sample_etis_batch",
    "basic_state_sample",
]

_TINY = 1e-300


@lru_cache(maxsize=8)
def _pattern_powers(zeta: float, M: int) -> np.ndarray:
    """Normalized powers W^m / lam^m of the pattern transfer chain.

    W = [[0, 1], [q0, 1]] on states (zero, occupied) with
    q0 = (1 - zeta^2) / (4 zeta^2); lam is its leading eigenvalue.
    """
    q0 = (1.0 - zeta * zeta) / (4.0 * zeta * zeta)
    lam = (1.0 + zeta) / (2.0 * zeta)
    wn = np.array([[0.0, 1.0], [q0, 1.0]]) / lam
    out = np.empty((M + 1, 2, 2))
    out[0] = np.eye(2)
    for m in range(1, M + 1):
        out[m] = out[m - 1] @ wn
    return out


def _check_args(zeta: float, M: int) -> None:
    if not 0.0 <= zeta < 1.0:
        raise ValueError("zeta must lie in [0, 1)")
    if M < 3:
        raise ValueError("M must be >= 3")
    if zeta == 0.0 and M % 2 != 0:
        raise ValueError("zeta=0 needs an even ring for the alternating state")


def _heights_from_pattern(
    zeta: float, pattern: np.ndarray, keys: np.ndarray
) -> np.ndarray:
    R, M = pattern.shape
    u = np.maximum(uniform_grid(keys, 1, M), _TINY)
    geo = 1 + np.floor(np.log(u) / math.log(zeta * zeta)).astype(np.int64)
    return np.where(pattern == 1, 2 * geo, 0)


def sample_even_gibbs_batch(
    zeta: float, M: int, rng: RngContext, count: int
) -> np.ndarray:
    """(count, M) independent rings; row r equals the single-sample
    output under rng.child(r)."""
    _check_args(zeta, M)
    keys = child_key_array(rng.key, np.arange(count))
    if zeta == 0.0:
        bits = (uniform_grid(keys, 0, 1)[:, 0] < 0.5).astype(np.int64)
        cols = np.arange(M, dtype=np.int64)[None, :]
        return np.where((cols + bits[:, None]) % 2 == 0, 2, 0)
    powtab = _pattern_powers(zeta, M)
    pattern = kernels.gibbs_pattern_batch(powtab, keys)
    return _heights_from_pattern(zeta, pattern, keys)


def sample_even_gibbs(zeta: float, M: int, rng: RngContext) -> np.ndarray:
    """One exact ring sample of the even-sector measure at fugacity zeta."""
    _check_args(zeta, M)
    key = np.array([rng.key], dtype=np.uint64)
    if zeta == 0.0:
        bit = int(uniform_grid(key, 0, 1)[0, 0] < 0.5)
        cols = np.arange(M, dtype=np.int64)
        return np.where((cols + bit) % 2 == 0, 2, 0)
    powtab = _pattern_powers(zeta, M)
    pattern = kernels.gibbs_pattern_batch(powtab, key)
    return _heights_from_pattern(zeta, pattern, key)[0]


# ---------------------------------------------------------------------------
# parity sources and the shifted family


@dataclass(frozen=True)
class ParitySource:
    """Ring-valued {0,1} parity laws: point mass on zero, product
    Bernoulli(kappa), a tiled periodic word, or rows of a sample set."""

    kind: str
    kappa: float = 0.0
    word: tuple[int, ...] = ()
    rows: np.ndarray | None = None

    @staticmethod
    def point() -> "ParitySource":
        return ParitySource("point")

    @staticmethod
    def bernoulli(kappa: float) -> "ParitySource":
        if not 0.0 <= kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        return ParitySource("bernoulli", kappa=kappa)

    @staticmethod
    def periodic(word) -> "ParitySource":
        w = tuple(int(x) for x in word)
        if not w or any(x not in (0, 1) for x in w):
            raise ValueError("parity word must be nonempty over {0,1}")
        return ParitySource("periodic", word=w)

    @staticmethod
    def from_samples(rows) -> "ParitySource":
        arr = np.asarray(rows, dtype=np.int64)
        if arr.ndim != 2 or not np.isin(arr, (0, 1)).all():
            raise ValueError("sample set must be a 2-d array over {0,1}")
        return ParitySource("samples", rows=arr)

    def _sample_keys(self, keys: np.ndarray, M: int) -> np.ndarray:
        count = keys.size
        if self.kind == "point":
            return np.zeros((count, M), dtype=np.int64)
        if self.kind == "bernoulli":
            return (uniform_grid(keys, 0, M) < self.kappa).astype(np.int64)
        if self.kind == "periodic":
            if M % len(self.word) != 0:
                raise ValueError("parity word must tile the ring")
            return np.tile(np.asarray(self.word, dtype=np.int64), (count, M // len(self.word)))
        if self.kind == "samples":
            if self.rows.shape[1] != M:
                raise ValueError("sample set width differs from M")
            u = uniform_grid(keys, 0, 1)[:, 0]
            pick = np.minimum((u * self.rows.shape[0]).astype(np.int64), self.rows.shape[0] - 1)
            return self.rows[pick]
        raise ValueError(f"unknown parity source {self.kind!r}")

    def sample_batch(self, M: int, rng: RngContext, count: int) -> np.ndarray:
        """(count, M) rows; row r equals ``sample(M, rng.child(r))``."""
        return self._sample_keys(child_key_array(rng.key, np.arange(count)), M)

    def sample(self, M: int, rng: RngContext) -> np.ndarray:
        return self._sample_keys(np.array([rng.key], dtype=np.uint64), M)[0]


def sample_etis_batch(
    rho_e: float, parity: ParitySource, M: int, rng: RngContext, count: int
) -> np.ndarray:
    """m + sigma with m ~ even-sector Gibbs at density rho_e and sigma
    from the parity source, independent.  Row r equals the
    single-sample output under rng.child(r)."""
    zeta = fugacity_of_density(rho_e)
    keys = child_key_array(rng.key, np.arange(count))
    gkeys = child_key_array(keys, 0)
    pkeys = child_key_array(keys, 1)
    _check_args(zeta, M)
    if zeta == 0.0:
        bits = (uniform_grid(gkeys, 0, 1)[:, 0] < 0.5).astype(np.int64)
        cols = np.arange(M, dtype=np.int64)[None, :]
        m = np.where((cols + bits[:, None]) % 2 == 0, 2, 0)
    else:
        powtab = _pattern_powers(zeta, M)
        m = _heights_from_pattern(
            zeta, kernels.gibbs_pattern_batch(powtab, gkeys), gkeys
        )
    if parity.kind == "point":
        return m
    return m + parity._sample_keys(pkeys, M)


def sample_etis(rho_e: float, parity: ParitySource, M: int, rng: RngContext) -> np.ndarray:
    """One sample of the density rho_e + kappa stationary family."""
    m = sample_even_gibbs(fugacity_of_density(rho_e), M, rng.child(0))
    sig = parity.sample(M, rng.child(1))
    return m + sig


def basic_state_sample(sigma, M: int, rng: RngContext, phase: int = 0) -> np.ndarray:
    """Alternating (2,0) background locked to a periodic parity word.

    The background carries height 2 on sites of the chosen phase class;
    the composite n* + sigma is returned under a uniform even rotation,
    which preserves the class.  Requires an even ring and a parity word
    whose tiled period is compatible with even translations.
    """
    if M % 2 != 0:
        raise ValueError("M must be even")
    if phase not in (0, 1):
        raise ValueError("phase must be 0 or 1")
    word = [int(x) for x in sigma]
    if not word or any(x not in (0, 1) for x in word):
        raise ValueError("parity word must be nonempty over {0,1}")
    if M % len(word) != 0:
        raise ValueError("parity word must tile the ring")
    sig = np.tile(np.asarray(word, dtype=np.int64), M // len(word))
    p = minimal_period(sig)
    if p > 1 and p % 2 != 0:
        raise ValueError("parity word needs an even period for a locked phase")
    cols = np.arange(M, dtype=np.int64)
    nstar = np.where(cols % 2 == phase, 2, 0)
    shift = 2 * int(rng.uniform(0, 0) * (M // 2))
    if shift >= M:
        shift = M - 2
    return rotate(nstar + sig, shift)
