"""Empirical measurement and hypothesis tests for ring ensembles.

Statistical conventions, fixed repo-wide: significance 0.01 for
chi-square tests, total-variation threshold 0.01 at 1e6 samples, and
3-sigma bands for scalar comparisons.  Chi-square validity is kept by
(i) using one window per independent ring in multinomial tests and
non-overlapping gap pairs in the renewal independence test, and
(ii) merging categories whose pooled expected count falls below 5
into a single rest bucket (bin counts are reported in the result).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .backend import kernels
from .lattice import as_exclusion, fixed_count_ring, rotate
from .rng import RngContext

__all__ = [
    "CylinderTable",
    "cylinder_table",
    "tv_distance",
    "ChiSquareReport",
    "two_sample_chisquare",
    "StationarityReport",
    "stationarity_test",
    "RenewalRecord",
    "QuenchResult",
    "find_markers",
    "marker_gaps",
    "quench_lowdensity",
    "rooted_window",
    "renewal_independence_test",
    "CorrelationReport",
    "two_point_correlation",
    "AbsorptionResult",
    "halfdensity_convergence",
]


def _fmt(word: Sequence[int]) -> str:
    xs = [int(x) for x in word]
    if all(0 <= x <= 9 for x in xs):
        return "".join(str(x) for x in xs)
    return ",".join(str(x) for x in xs)


# ---------------------------------------------------------------------------
# cylinder tables


@dataclass
class CylinderTable:
    k: int
    counts: dict[str, int]
    total: int

    def probabilities(self) -> dict[str, float]:
        return {w: c / self.total for w, c in self.counts.items()}


def cylinder_table(samples, k: int) -> CylinderTable:
    """Counts of every cyclic length-k window across all sample rings."""
    if not 1 <= k <= 12:
        raise ValueError("k must be in 1..12")
    if isinstance(samples, np.ndarray) and samples.ndim == 1:
        samples = samples[None, :]
    counts: dict[str, int] = {}
    total = 0
    for row in samples:
        arr = np.asarray(row)
        M = arr.size
        ext = np.concatenate([arr, arr[: k - 1]])
        win = np.lib.stride_tricks.sliding_window_view(ext, k)[:M]
        pats, cnts = np.unique(win, axis=0, return_counts=True)
        for p, c in zip(pats, cnts):
            key = _fmt(p)
            counts[key] = counts.get(key, 0) + int(c)
        total += M
    return CylinderTable(k, counts, total)


def tv_distance(a, b) -> float:
    """Total variation between two probability tables (or count tables).

    Accepts keyed tables (dict or CylinderTable) or two aligned numeric
    arrays; counts are normalized either way.
    """
    if not isinstance(a, (dict, CylinderTable)) and not isinstance(b, (dict, CylinderTable)):
        pa = np.asarray(a, dtype=np.float64)
        pb = np.asarray(b, dtype=np.float64)
        if pa.shape != pb.shape:
            raise ValueError("aligned arrays must share a shape")
        return 0.5 * float(np.abs(pa / pa.sum() - pb / pb.sum()).sum())

    def as_probs(x) -> dict[str, float]:
        if isinstance(x, CylinderTable):
            return x.probabilities()
        tot = float(sum(x.values()))
        return {k: v / tot for k, v in x.items()}

    pa, pb = as_probs(a), as_probs(b)
    keys = set(pa) | set(pb)
    return 0.5 * sum(abs(pa.get(k, 0.0) - pb.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# chi-square comparisons


@dataclass
class ChiSquareReport:
    statistic: float
    dof: int
    p_value: float
    categories: int
    merged: int                  # cells folded into the rest bucket
    n_a: int
    n_b: int


def two_sample_chisquare(counts_a: dict[str, int], counts_b: dict[str, int]) -> ChiSquareReport:
    """Two-sample multinomial chi-square with small-cell merging.

    Cells whose pooled expected count is below 5 in either sample are
    merged into one rest bucket; dof = categories - 1.  Degenerate
    tables (one surviving category) give p = 1 when the supports agree.
    """
    keys = sorted(set(counts_a) | set(counts_b))
    a = np.array([counts_a.get(k, 0) for k in keys], dtype=np.float64)
    b = np.array([counts_b.get(k, 0) for k in keys], dtype=np.float64)
    na, nb = a.sum(), b.sum()
    if na == 0 or nb == 0:
        raise ValueError("empty sample")
    pooled = (a + b) / (na + nb)
    keep = (pooled * min(na, nb)) >= 5.0
    merged = int((~keep).sum())
    if merged:
        a = np.append(a[keep], a[~keep].sum())
        b = np.append(b[keep], b[~keep].sum())
        pooled = (a + b) / (na + nb)
    cats = a.size
    if cats < 2:
        return ChiSquareReport(0.0, 0, 1.0, cats, merged, int(na), int(nb))
    ea, eb = pooled * na, pooled * nb
    stat = float((((a - ea) ** 2) / ea).sum() + (((b - eb) ** 2) / eb).sum())
    dof = cats - 1
    p = float(sps.chi2.sf(stat, dof))
    return ChiSquareReport(stat, dof, p, cats, merged, int(na), int(nb))


@dataclass
class StationarityReport:
    tv: float
    p_value: float
    chisq: ChiSquareReport
    table_a: dict[str, int]
    table_b: dict[str, int]


def stationarity_test(
    sampler: Callable[[RngContext, int], np.ndarray],
    stepper: Callable[[np.ndarray, RngContext], np.ndarray],
    k: int,
    n_samples: int,
    rng: RngContext,
) -> StationarityReport:
    """Compare k-window laws of fresh samples vs stepped samples.

    One window (position 0) per independent ring keeps the counts
    multinomial.  sampler(rng, count) -> (count, M); stepper maps such
    a batch one step forward.
    """
    fresh = sampler(rng.child(0), n_samples)
    stepped = stepper(sampler(rng.child(1), n_samples), rng.child(2))

    def table(arr2d: np.ndarray) -> dict[str, int]:
        pats, cnts = np.unique(np.asarray(arr2d)[:, :k], axis=0, return_counts=True)
        return {_fmt(p): int(c) for p, c in zip(pats, cnts)}

    ta, tb = table(fresh), table(stepped)
    rep = two_sample_chisquare(ta, tb)
    return StationarityReport(tv_distance(ta, tb), rep.p_value, rep, ta, tb)


# ---------------------------------------------------------------------------
# low-density quench and renewal structure


@dataclass
class RenewalRecord:
    markers: np.ndarray          # i with cfg[i-2]=cfg[i-1]=cfg[i]=0 (cyclic)
    gaps: np.ndarray             # cyclic successive differences; sums to M
    interiors: list[tuple[int, ...]]


@dataclass
class QuenchResult:
    final: np.ndarray
    frozen: bool
    steps: int
    record: RenewalRecord
    q_hat: float
    rho: float
    M: int


def find_markers(cfg) -> np.ndarray:
    occ = as_exclusion(cfg)
    z = occ == 0
    return np.flatnonzero(z & np.roll(z, 1) & np.roll(z, 2))


def marker_gaps(markers: np.ndarray, M: int) -> np.ndarray:
    if markers.size == 0:
        return np.empty(0, dtype=np.int64)
    if markers.size == 1:
        return np.array([M], dtype=np.int64)
    d = np.diff(markers)
    return np.append(d, M - markers[-1] + markers[0]).astype(np.int64)


def _interiors(cfg: np.ndarray, markers: np.ndarray) -> list[tuple[int, ...]]:
    M = cfg.size
    out: list[tuple[int, ...]] = []
    if markers.size < 2:
        return out
    for a, b in zip(markers, np.append(markers[1:], markers[0] + M)):
        seg = [int(cfg[j % M]) for j in range(a + 1, b)]
        out.append(tuple(seg))
    return out


def quench_lowdensity(
    rho: float, M: int, rng: RngContext, max_steps: int = 10_000_000
) -> QuenchResult:
    """Freeze a density-rho ring and read off its marker renewal data.

    Starts from round(rho*M) particles placed uniformly, runs the
    facilitated dynamics until no particle can move (cap reported), and
    estimates q as sqrt(marker density / (1-rho)^3).
    """
    if not 0.0 < rho < 0.5:
        raise ValueError("rho must lie in (0, 1/2)")
    n = round(rho * M)
    cfg = fixed_count_ring(M, n, rng.child(0))
    out, steps = kernels.fssep_until_frozen(cfg, rng.child(1).ukey, 0, max_steps)
    markers = find_markers(out)
    gaps = marker_gaps(markers, M)
    record = RenewalRecord(markers, gaps, _interiors(out, markers))
    q_hat = math.sqrt((markers.size / M) / (1.0 - rho) ** 3)
    return QuenchResult(out, steps >= 0, int(steps), record, q_hat, rho, M)


def rooted_window(cfg, markers: np.ndarray, rng: RngContext, length: int = 6) -> np.ndarray:
    """Window at offsets 1..length from a uniformly chosen marker."""
    if markers.size == 0:
        raise ValueError("no markers to root at")
    occ = as_exclusion(cfg)
    j = int(rng.uniform(0, 0) * markers.size)
    if j >= markers.size:
        j = markers.size - 1
    m = int(markers[j])
    idx = (m + 1 + np.arange(length)) % occ.size
    return occ[idx]


_GAP_BINS = (1, 4, 5, 6)  # categories: ==1, ==4, ==5, ==6, >=7


def _gap_category(g: int) -> int:
    for i, b in enumerate(_GAP_BINS):
        if g == b:
            return i
    return len(_GAP_BINS)


def renewal_independence_test(gap_lists: Iterable[np.ndarray]) -> ChiSquareReport:
    """Chi-square independence of consecutive gaps.

    Pairs are non-overlapping within each ring ((g1,g2), (g3,g4), ...)
    so pair observations are independent under the renewal hypothesis.
    Gap categories: {1}, {4}, {5}, {6}, {>=7} (2 and 3 cannot occur).
    """
    ncat = len(_GAP_BINS) + 1
    table = np.zeros((ncat, ncat), dtype=np.float64)
    total_gaps = 0
    for gaps in gap_lists:
        g = np.asarray(gaps)
        total_gaps += g.size
        for i in range(0, g.size - 1, 2):
            table[_gap_category(int(g[i])), _gap_category(int(g[i + 1]))] += 1
    if total_gaps < 10_000:
        raise ValueError(f"need >= 10000 gaps, got {total_gaps}")
    keep_r = table.sum(axis=1) > 0
    keep_c = table.sum(axis=0) > 0
    table = table[np.ix_(keep_r, keep_c)]
    stat, p, dof, _ = sps.chi2_contingency(table, correction=False)
    return ChiSquareReport(
        float(stat), int(dof), float(p), table.size, 0, int(table.sum()), int(table.sum())
    )


# ---------------------------------------------------------------------------
# correlation decay


@dataclass
class CorrelationReport:
    distances: np.ndarray
    cov: np.ndarray
    sem: np.ndarray
    ratio: float
    status: str                  # ok | no_decay | no_signal
    note: str = (
        "ratio is the fitted per-step decay of |cov| of the height-0 "
        "indicator; a value near 1 means periodic structure, near 0 no signal"
    )


def two_point_correlation(samples: np.ndarray, max_distance: int) -> CorrelationReport:
    """Fit the per-step decay ratio of Cov(1{h(0)=0}, 1{h(d)=0}).

    Uses per-ring product averages so the standard error is honest; the
    fit runs over the contiguous range of distances whose covariance
    clears a 5-sigma noise floor.
    """
    arr = np.asarray(samples)
    if arr.ndim != 2:
        raise ValueError("samples must be (rings, sites)")
    R, M = arr.shape
    if not 1 <= max_distance < M:
        raise ValueError("max_distance must be in 1..M-1")
    x = (arr == 0).astype(np.float64)
    m = x.mean()
    ds = np.arange(1, max_distance + 1)
    cov = np.empty(ds.size)
    sem = np.empty(ds.size)
    for i, d in enumerate(ds):
        prod = (x * np.roll(x, -int(d), axis=1)).mean(axis=1) - m * m
        cov[i] = prod.mean()
        sem[i] = prod.std(ddof=1) / math.sqrt(R) if R > 1 else np.inf
    usable = 0
    while usable < ds.size and abs(cov[usable]) > 5.0 * sem[usable]:
        usable += 1
    if usable < 2:
        # a slope needs two clear points
        return CorrelationReport(ds, cov, sem, 0.0, "no_signal")
    slope = np.polyfit(ds[:usable], np.log(np.abs(cov[:usable])), 1)[0]
    ratio = float(np.exp(slope))
    status = "no_decay" if ratio > 0.95 else "ok"
    return CorrelationReport(ds, cov, sem, ratio, status)


# ---------------------------------------------------------------------------
# half-density absorption


@dataclass
class AbsorptionResult:
    steps: int
    membership: str
    speed2_ok: bool
    final: np.ndarray


def halfdensity_convergence(
    M: int, rng: RngContext, max_steps: int = 1_000_000, verify_steps: int = 100
) -> AbsorptionResult:
    """Run a balanced random ring into the left/right mover classes.

    After absorption, verifies the two-sites-per-step translation
    identity (left movers shift by -2, right movers by +2) for
    ``verify_steps`` further steps.
    """
    if M % 2 != 0:
        raise ValueError("M must be even")
    cfg = fixed_count_ring(M, M // 2, rng.child(0))
    key = rng.child(1).ukey
    out, steps, cls = kernels.fssep_until_member(cfg, key, 0, max_steps)
    names = {0: "neither", 1: "left", 2: "right", 3: "both"}
    membership = names[int(cls)]
    if cls == 0:
        return AbsorptionResult(-1, membership, False, out)
    ok = True
    cur = out
    for j in range(verify_steps):
        nxt = kernels.fssep_step(cur, key, int(steps) + j)
        want_left = rotate(cur, -2)
        want_right = rotate(cur, 2)
        if cls == 1:
            ok = ok and np.array_equal(nxt, want_left)
        elif cls == 2:
            ok = ok and np.array_equal(nxt, want_right)
        else:
            ok = ok and np.array_equal(nxt, want_left) and np.array_equal(nxt, want_right)
        if not ok:
            break
        cur = nxt
    return AbsorptionResult(int(steps), membership, ok, cur)
