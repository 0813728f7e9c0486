"""Ring configurations and their static structure.

Two config kinds live here: exclusion rings (0/1 occupancy, numpy uint8)
and stack rings (nonnegative integer heights, numpy int64).  Site i has
neighbours (i-1) % M and (i+1) % M.

The height profile of an exclusion ring rises by one across an empty site
and falls by one across an occupied site; its range `delta` is defined
only for balanced rings (particle number = M/2), where the profile closes
up.  Membership predicates cover the three special families used
throughout: the no-sparse-zeros exclusion class (no cyclic 000, 0100,
0010, 01010), the spaced-stack class (no two adjacent stacks of height
<= 1), and the cyclically parseable classes over the word sets
{1100, 10} / {0011, 01} whose members translate rigidly under the
dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels


class DecompositionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# construction / validation / serialization


def as_exclusion(cfg) -> np.ndarray:
    """Coerce to a uint8 occupancy ring; accepts '0110', sequences, arrays."""
    if isinstance(cfg, str):
        s = cfg.strip()
        if s.startswith("ring:"):
            return load_ring(s, kind="exclusion")
        arr = np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(cfg, dtype=np.int64)
    arr = np.asarray(arr, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("exclusion config must be a nonempty 1-d ring")
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError("exclusion config entries must be 0 or 1")
    return arr.astype(np.uint8)


def as_stack(cfg) -> np.ndarray:
    """Coerce to an int64 height ring."""
    if isinstance(cfg, str):
        s = cfg.strip()
        if s.startswith("ring:"):
            return load_ring(s, kind="stack")
        arr = np.array([int(x) for x in s.split(",")], dtype=np.int64)
    else:
        arr = np.asarray(cfg, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("stack config must be a nonempty 1-d ring")
    if np.any(arr < 0):
        raise ValueError("stack heights must be >= 0")
    return arr


def dump_ring(cfg: np.ndarray) -> str:
    """Serialize as 'ring:<M>:<payload>'; 0/1 string or comma-joined heights."""
    cfg = np.asarray(cfg)
    if cfg.dtype == np.uint8 and cfg.size and cfg.max(initial=0) <= 1:
        payload = "".join("1" if v else "0" for v in cfg)
    else:
        payload = ",".join(str(int(v)) for v in cfg)
    return f"ring:{cfg.size}:{payload}"


def load_ring(text: str, kind: str | None = None) -> np.ndarray:
    text = text.strip()
    if not text.startswith("ring:"):
        raise ValueError("ring serialization must start with 'ring:'")
    _, size_s, payload = text.split(":", 2)
    size = int(size_s)
    if "," in payload or kind == "stack":
        arr = as_stack(payload) if "," in payload else as_stack(",".join(payload))
    else:
        arr = as_exclusion(payload)
    if arr.size != size:
        raise ValueError(f"declared length {size} != payload length {arr.size}")
    return arr


def rotate(cfg: np.ndarray, q: int) -> np.ndarray:
    """Shift content right by q sites: rotate(c, q)[i] = c[(i - q) % M]."""
    return np.roll(cfg, q)


def minimal_period(seq) -> int:
    """Smallest p > 0 with rotate(seq, p) == seq; always divides len(seq)."""
    if isinstance(seq, str):
        s = [int(x) for x in (seq.split(",") if "," in seq else seq)]
    elif isinstance(seq, (list, tuple)):
        s = [int(x) for x in seq]
    else:
        s = [int(x) for x in np.asarray(seq).ravel()]
    n = len(s)
    if n == 0:
        raise ValueError("empty ring")
    if all(0 <= x < 256 for x in s):
        b = bytes(s)
        return (b + b).find(b, 1)
    for p in range(1, n):
        if n % p == 0 and s[p:] + s[:p] == s:
            return p
    return n


# ---------------------------------------------------------------------------
# height profile


def height_profile(cfg, anchor: int = 0) -> np.ndarray:
    """Profile h[0..M], h[0] = 0, step +1 over empty / -1 over occupied sites
    read cyclically from `anchor`."""
    occ = as_exclusion(cfg)
    M = occ.size
    steps = 1 - 2 * np.roll(occ, -anchor).astype(np.int64)
    prof = np.empty(M + 1, dtype=np.int64)
    prof[0] = 0
    np.cumsum(steps, out=prof[1:])
    return prof


def delta(cfg) -> int:
    """Profile range max-min; defined only on balanced rings (N = M/2)."""
    occ = as_exclusion(cfg)
    M = occ.size
    if M % 2 != 0 or int(occ.sum()) * 2 != M:
        raise ValueError("delta requires an even ring at density exactly 1/2")
    prof = height_profile(occ)
    return int(prof.max() - prof.min())


# ---------------------------------------------------------------------------
# predicates


def is_frozen(cfg) -> bool:
    """Exclusion ring with no two cyclically adjacent particles."""
    occ = as_exclusion(cfg).astype(bool)
    return not bool((occ & np.roll(occ, 1)).any())


def is_frozen_stack(cfg) -> bool:
    """Stack ring with every height <= 1."""
    return bool((as_stack(cfg) <= 1).all())


def parity_map(cfg) -> np.ndarray:
    """Per-site height parity, an invariant of the spaced-stack dynamics."""
    return (as_stack(cfg) % 2).astype(np.uint8)


_FORBIDDEN_H = ("000", "0100", "0010", "01010")


def member_H(cfg) -> bool:
    """No cyclic occurrence of 000, 0100, 0010, 01010 (periodized)."""
    occ = as_exclusion(cfg)
    M = occ.size
    text = "".join("1" if v else "0" for v in occ)
    reps = (max(len(p) for p in _FORBIDDEN_H) + M - 1) // M + 1
    doubled = text * reps
    windowed = doubled[: M + max(len(p) for p in _FORBIDDEN_H) - 1]
    return not any(p in windowed for p in _FORBIDDEN_H)


def member_spaced_stacks(cfg) -> bool:
    """No two cyclically adjacent short stacks (height <= 1)."""
    h = as_stack(cfg)
    short = h <= 1
    return not bool((short & np.roll(short, 1)).any())


def member_left_right(cfg) -> str:
    """'left' / 'right' / 'both' / 'neither' by cyclic parse over
    {1100, 10} and {0011, 01}."""
    occ = as_exclusion(cfg)
    cls = kernels.member_class(occ)
    return ("neither", "left", "right", "both")[cls]


# ---------------------------------------------------------------------------
# region decomposition (diagnostic; the parse above is the ground truth)


@dataclass(frozen=True)
class Region:
    kind: str  # 'T', 'L', 'R', or 'B' for the undecomposed alternating ring
    start: int
    length: int


def _cyclic_runs(occ: np.ndarray):
    """Maximal runs of equal symbols as (value, start, length), cyclic."""
    M = occ.size
    breaks = np.flatnonzero(occ != np.roll(occ, 1))
    if breaks.size == 0:
        return [(int(occ[0]), 0, M)]
    runs = []
    for k, s in enumerate(breaks):
        e = breaks[(k + 1) % breaks.size]
        length = (e - s) % M or M
        runs.append((int(occ[s]), int(s), int(length)))
    return runs


def _linear_parse_ok(sym: np.ndarray, kind: str) -> bool:
    """Non-cyclic factorization into {10, 1100} (L) or {01, 0011} (R)."""
    first, second = (1, 0) if kind == "L" else (0, 1)
    n = sym.size
    i = 0
    while i < n:
        if sym[i] != first:
            return False
        if i + 1 < n and sym[i + 1] == second:
            i += 2
        elif (
            i + 3 < n
            and sym[i + 1] == first
            and sym[i + 2] == second
            and sym[i + 3] == second
        ):
            i += 4
        else:
            return False
    return True


def decompose_regions(cfg) -> list[Region]:
    """Split a ring into translating (T) and left/right-moving regions.

    T regions are maximal cyclic blocks of >= 2 consecutive length-2 runs
    (factors of the period-4 paired word, so length >= 4).  Residual
    maximal blocks are typed by their first two symbols (10 -> L,
    01 -> R) and must factor into the matching word set; anything else
    raises DecompositionError.  The fully alternating ring is a single
    'B' region, never decomposed.
    """
    occ = as_exclusion(cfg)
    M = occ.size
    if M >= 2 and bool((occ != np.roll(occ, 1)).all()):
        return [Region("B", 0, M)]
    runs = _cyclic_runs(occ)
    R = len(runs)
    if R == 1:
        raise DecompositionError("constant ring has no region structure")
    is2 = [r[2] == 2 for r in runs]
    covered = [False] * R
    regions: list[Region] = []
    if all(is2):
        regions.append(Region("T", runs[0][1], M))
        return regions
    # chains of consecutive length-2 runs, scanned from a non-2 anchor
    anchor = next(i for i in range(R) if not is2[i])
    order = [(anchor + 1 + i) % R for i in range(R)]  # ends back at anchor
    chain: list[int] = []
    for idx in order:
        if is2[idx]:
            chain.append(idx)
            continue
        if len(chain) >= 2:
            start = runs[chain[0]][1]
            length = sum(runs[c][2] for c in chain)
            regions.append(Region("T", start, length))
            for c in chain:
                covered[c] = True
        chain = []
    # residual maximal blocks of uncovered runs
    blocks: list[list[int]] = []
    cur: list[int] = []
    first_covered = next((i for i in range(R) if covered[i]), None)
    scan = (
        list(range(R))
        if first_covered is None
        else [(first_covered + 1 + i) % R for i in range(R - 1)]
    )
    for idx in scan:
        if covered[idx]:
            if cur:
                blocks.append(cur)
                cur = []
        else:
            cur.append(idx)
    if cur:
        blocks.append(cur)
    for blk in blocks:
        start = runs[blk[0]][1]
        length = sum(runs[b][2] for b in blk)
        sym = occ[(start + np.arange(length)) % M]
        a = int(sym[0])
        b = int(sym[1]) if length > 1 else -1
        if (a, b) == (1, 0) and _linear_parse_ok(sym, "L"):
            kind = "L"
        elif (a, b) == (0, 1) and _linear_parse_ok(sym, "R"):
            kind = "R"
        else:
            raise DecompositionError(
                f"residual block at {start} (length {length}) is not a moving region"
            )
        regions.append(Region(kind, start, length))
    regions.sort(key=lambda r: r.start)
    return regions


def classify_regions(regions: list[Region]) -> str:
    kinds = {r.kind for r in regions}
    if kinds <= {"B", "T"}:
        return "both"
    if "L" in kinds and "R" in kinds:
        return "neither"
    return "left" if "L" in kinds else "right"


# ---------------------------------------------------------------------------
# random configurations


def bernoulli_ring(M: int, rho: float, rng) -> np.ndarray:
    u = rng.uniform_array(0, np.arange(M, dtype=np.uint64))
    return (u < rho).astype(np.uint8)


def fixed_count_ring(M: int, N: int, rng) -> np.ndarray:
    """Exactly N particles placed uniformly at random.

    The N sites with the smallest keyed uniforms form an exchangeable
    subset, so the placement is uniform over N-subsets.
    """
    if not 0 <= N <= M:
        raise ValueError("need 0 <= N <= M")
    u = rng.uniform_array(0, np.arange(M, dtype=np.uint64))
    occ = np.zeros(M, dtype=np.uint8)
    if N:
        occ[np.argpartition(u, N - 1)[:N]] = 1
    return occ
