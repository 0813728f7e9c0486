"""Counter-based randomness for synchronous lattice updates.

Every random decision in the dynamics is a pure function of the triple
(key, step, index): nothing is drawn from mutable generator state.  This
makes trajectories reproducible bit-for-bit regardless of evaluation
order, thread count, or backend (numba vs numpy), and lets two coupled
processes consume the same coins by construction.

The hash is three chained splitmix64 finalizer rounds.  Each round is an
avalanching bijection on 64 bits; the chain key -> step -> index is the
standard stateless-RNG construction.  All arithmetic is mod 2**64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1

# splitmix64 finalizer multipliers
MIX_C1 = 0xBF58476D1CE4E5B9
MIX_C2 = 0x94D049BB133111EB
# odd multipliers decorrelating the step / index / stream slots
STEP_MUL = 0xD1342543DE82EF95
IDX_MUL = 0x2545F4914F6CDD1D
STREAM_MUL = 0x9E3779B97F4A7C15

INV_2_53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    """splitmix64 finalizer on a python int (reference implementation)."""
    x = int(x) & MASK64
    x ^= x >> 30
    x = (x * MIX_C1) & MASK64
    x ^= x >> 27
    x = (x * MIX_C2) & MASK64
    x ^= x >> 31
    return x


def derive_key(seed: int, stream: int = 0) -> int:
    """Collapse (seed, stream) into the 64-bit kernel key."""
    return mix64(mix64(seed & MASK64) ^ ((stream + 1) * STREAM_MUL & MASK64))


def step_key(key: int, step: int) -> int:
    """Per-step base hash; kernels mix the site/bond index into this."""
    return mix64(key ^ ((step + 1) * STEP_MUL & MASK64))


def hash_u64(key: int, step: int, idx: int) -> int:
    return mix64(step_key(key, step) ^ ((idx + 1) * IDX_MUL & MASK64))


def bit(key: int, step: int, idx: int) -> int:
    """Fair coin for (key, step, idx); 0 or 1."""
    return hash_u64(key, step, idx) >> 63


def uniform(key: int, step: int, idx: int) -> float:
    """Uniform in [0, 1) from the top 53 bits."""
    return (hash_u64(key, step, idx) >> 11) * INV_2_53


# ---------------------------------------------------------------------------
# vectorized (numpy) versions; uint64 wraps silently in array ufuncs


def _mix64_arr(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):  # wraparound is the point
        x = x ^ (x >> np.uint64(30))
        x = x * np.uint64(MIX_C1)
        x = x ^ (x >> np.uint64(27))
        x = x * np.uint64(MIX_C2)
        return x ^ (x >> np.uint64(31))


def hash_u64_array(key: int, step: int, idx: np.ndarray) -> np.ndarray:
    base = np.asarray(idx, dtype=np.uint64) + np.uint64(1)
    h = _mix64_arr(base * np.uint64(IDX_MUL) ^ np.uint64(step_key(key, step)))
    return h


def bit_array(key: int, step: int, idx: np.ndarray) -> np.ndarray:
    """Fair coins as a bool array."""
    return (hash_u64_array(key, step, idx) >> np.uint64(63)).astype(bool)


def uniform_array(key: int, step: int, idx: np.ndarray) -> np.ndarray:
    return (hash_u64_array(key, step, idx) >> np.uint64(11)).astype(np.float64) * INV_2_53


def child_key_array(keys, labels) -> np.ndarray:
    """Keys of .child(label) contexts, vectorized over keys and/or labels."""
    k = np.asarray(keys, dtype=np.uint64)
    lab = np.asarray(labels, dtype=np.uint64)
    with np.errstate(over="ignore"):
        seeds = _mix64_arr(k ^ ((lab + np.uint64(1)) * np.uint64(IDX_MUL)))
    return _mix64_arr(_mix64_arr(seeds) ^ np.uint64(STREAM_MUL))


def step_key_array(keys: np.ndarray, step: int) -> np.ndarray:
    sk = ((step + 1) * STEP_MUL) & MASK64
    return _mix64_arr(np.asarray(keys, dtype=np.uint64) ^ np.uint64(sk))


def hash_grid(keys: np.ndarray, step: int, idx: np.ndarray) -> np.ndarray:
    """(len(keys), len(idx)) grid of hashes, rows keyed per ring."""
    sk = step_key_array(keys, step)
    base = (np.asarray(idx, dtype=np.uint64) + np.uint64(1)) * np.uint64(IDX_MUL)
    return _mix64_arr(base[None, :] ^ sk[:, None])


def bit_grid(keys: np.ndarray, step: int, n: int) -> np.ndarray:
    return (hash_grid(keys, step, np.arange(n)) >> np.uint64(63)).astype(bool)


def uniform_grid(keys: np.ndarray, step: int, n: int) -> np.ndarray:
    h = hash_grid(keys, step, np.arange(n))
    return (h >> np.uint64(11)).astype(np.float64) * INV_2_53


@dataclass(frozen=True)
class RngContext:
    """Keyed randomness source.

    `seed` is user-facing; `stream` separates independent uses (dynamics,
    sampler phases, rotations, ...) so they never share coins.  `child(n)`
    derives a decorrelated sub-context deterministically.
    """

    seed: int
    stream: int = 0

    @property
    def key(self) -> int:
        return derive_key(self.seed, self.stream)

    @property
    def ukey(self) -> np.uint64:
        # kernel-facing form; numba dispatch rejects python ints >= 2**63
        return np.uint64(derive_key(self.seed, self.stream))

    def child(self, label: int) -> "RngContext":
        return RngContext(seed=mix64(self.key ^ ((label + 1) * IDX_MUL & MASK64)), stream=0)

    def bit(self, step: int, idx: int) -> int:
        return bit(self.key, step, idx)

    def uniform(self, step: int, idx: int) -> float:
        return uniform(self.key, step, idx)

    def bit_array(self, step: int, idx: np.ndarray) -> np.ndarray:
        return bit_array(self.key, step, idx)

    def uniform_array(self, step: int, idx: np.ndarray) -> np.ndarray:
        return uniform_array(self.key, step, idx)
