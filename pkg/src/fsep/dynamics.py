"""Synchronous ring dynamics: facilitated exclusion and stack moves.

One fair bit per conflicted site (exclusion) or per tall-tall bond
(stacks), keyed by (seed, step, index) so trajectories are
reproducible regardless of scheduling.  The coupled evolution drives a
stack ring and its coded exclusion image with the same coins, keeping
``exclusion = rotate(phi(stack), offset)`` at every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .backend import kernels
from .lattice import (
    DecompositionError,
    as_exclusion,
    as_stack,
    decompose_regions,
    is_frozen,
    is_frozen_stack,
    minimal_period,
    rotate,
)
from .rng import RngContext
from .substitution import phi_image

__all__ = [
    "step_fssep",
    "step_ssm",
    "run",
    "until_frozen",
    "until_member",
    "FreezeResult",
    "MemberResult",
    "Observer",
    "cylinder_observer",
    "frozen_observer",
    "region_observer",
    "parity_observer",
    "TrajectorySummary",
    "evolve",
    "CoupledState",
    "coupled_step",
]

_MEMBER_NAMES = {0: "neither", 1: "left", 2: "right", 3: "both"}


def step_fssep(cfg, rng: RngContext, step: int = 0) -> np.ndarray:
    """One synchronous facilitated-exclusion step.

    Every particle with exactly one occupied neighbour targets its
    empty neighbour; a doubly-targeted empty site admits the left
    attacker iff the site's fair bit is 1.
    """
    occ = as_exclusion(cfg)
    return kernels.fssep_step(occ, rng.ukey, step)


def step_ssm(n, rng: RngContext, step: int = 0) -> np.ndarray:
    """One synchronous stack step.

    Per bond: short-short idles, tall-to-short moves one particle onto
    the short stack, tall-tall moves one particle rightward iff the
    bond's fair bit is 1.
    """
    h = as_stack(n)
    return kernels.ssm_step(h, rng.ukey, step)


def _convert(model: str, cfg) -> np.ndarray:
    if model == "fssep":
        return as_exclusion(cfg)
    if model == "ssm":
        return as_stack(cfg)
    raise ValueError(f"unknown model {model!r}")


def run(model: str, cfg, rng: RngContext, steps: int, t0: int = 0) -> np.ndarray:
    """Apply ``steps`` synchronous steps (step indices t0, t0+1, ...)."""
    arr = _convert(model, cfg)
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if model == "fssep":
        return kernels.fssep_run(arr, rng.ukey, t0, steps)
    return kernels.ssm_run(arr, rng.ukey, t0, steps)


@dataclass(frozen=True)
class FreezeResult:
    config: np.ndarray
    steps: int
    frozen: bool


@dataclass(frozen=True)
class MemberResult:
    config: np.ndarray
    steps: int
    membership: str


def until_frozen(cfg, rng: RngContext, max_steps: int, t0: int = 0) -> FreezeResult:
    """Evolve the exclusion ring until no particle can move (or give up)."""
    occ = as_exclusion(cfg)
    out, steps = kernels.fssep_until_frozen(occ, rng.ukey, t0, max_steps)
    return FreezeResult(out, int(steps), steps >= 0)


def until_member(cfg, rng: RngContext, max_steps: int, t0: int = 0) -> MemberResult:
    """Evolve until the ring factors into left or right mover words."""
    occ = as_exclusion(cfg)
    out, steps, cls = kernels.fssep_until_member(occ, rng.ukey, t0, max_steps)
    return MemberResult(out, int(steps), _MEMBER_NAMES[int(cls)])


# ---------------------------------------------------------------------------
# observers


@dataclass(frozen=True)
class Observer:
    name: str
    fn: Callable[[np.ndarray], object]


def cylinder_observer(k: int) -> Observer:
    """Counts of every length-k window around the ring."""

    def fn(cfg: np.ndarray) -> dict[str, int]:
        M = cfg.size
        out: dict[str, int] = {}
        ext = np.concatenate([cfg, cfg[: k - 1]])
        for i in range(M):
            word = "".join(str(int(x)) for x in ext[i : i + k])
            out[word] = out.get(word, 0) + 1
        return out

    return Observer(f"cylinder{k}", fn)


def frozen_observer(model: str) -> Observer:
    test = is_frozen if model == "fssep" else is_frozen_stack
    return Observer("frozen", lambda cfg: bool(test(cfg)))


def region_observer() -> Observer:
    def fn(cfg: np.ndarray) -> dict[str, int]:
        try:
            regions = decompose_regions(cfg)
        except DecompositionError:
            return {"undecomposable": 1}
        out: dict[str, int] = {}
        for r in regions:
            out[r.kind] = out.get(r.kind, 0) + 1
        return out

    return Observer("regions", fn)


def parity_observer() -> Observer:
    return Observer(
        "parity", lambda cfg: "".join(str(int(x) & 1) for x in cfg)
    )


@dataclass
class TrajectorySummary:
    model: str
    final: np.ndarray
    steps: int
    records: list[dict] = field(default_factory=list)


def evolve(
    model: str,
    cfg,
    steps: int,
    rng: RngContext,
    observers: Iterable[Observer] = (),
    every: int = 1,
    t0: int = 0,
) -> TrajectorySummary:
    """Run ``steps`` steps, sampling observers on a fixed schedule.

    Observers run at step 0, every ``every`` steps, and at the final
    step; records are JSON-ready {step, observable, value} dicts.
    Bit-reproducible given (rng, cfg, steps).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if every < 1:
        raise ValueError("every must be >= 1")
    obs = list(observers)
    arr = _convert(model, cfg)
    stepper = kernels.fssep_run if model == "fssep" else kernels.ssm_run
    records: list[dict] = []

    def snapshot(t: int, a: np.ndarray) -> None:
        for ob in obs:
            records.append({"step": t, "observable": ob.name, "value": ob.fn(a)})

    snapshot(0, arr)
    done = 0
    while done < steps:
        chunk = min(every - (done % every) if done % every else every, steps - done)
        arr = stepper(arr, rng.ukey, t0 + done, chunk)
        done += chunk
        if done % every == 0 or done == steps:
            snapshot(done, arr)
    return TrajectorySummary(model, arr, steps, records)


# ---------------------------------------------------------------------------
# coupled stack/exclusion evolution


@dataclass(frozen=True)
class CoupledState:
    """Stack ring plus a rotation-consistent coded exclusion image."""

    stack: np.ndarray
    exclusion: np.ndarray
    offset: int

    def __post_init__(self):
        stack = as_stack(self.stack)
        excl = as_exclusion(self.exclusion)
        object.__setattr__(self, "stack", stack)
        object.__setattr__(self, "exclusion", excl)
        if stack.size < 2:
            raise ValueError("coupled rings need at least two stack sites")
        if excl.size != stack.size + int(stack.sum()):
            raise ValueError("exclusion length must be stack length + particles")
        if not (0 <= self.offset < excl.size):
            raise ValueError("offset out of range")
        if not np.array_equal(excl, rotate(phi_image(stack), self.offset)):
            raise ValueError("exclusion is not the rotated code of the stack")

    @staticmethod
    def from_stack(stack, offset: int = 0) -> "CoupledState":
        n = as_stack(stack)
        img = phi_image(n)
        q = offset % minimal_period(img)
        return CoupledState(n, rotate(img, q), q)


def coupled_step(state: CoupledState, rng: RngContext, step: int = 0) -> CoupledState:
    """Advance stack and exclusion with shared coins.

    The stack moves as one step_ssm step.  A move across stack bond
    (i-1, i) relocates the exclusion particle adjacent to the empty
    site coding letter i: rightward moves arrive from the left,
    leftward moves from the right.  The rotation offset shifts only
    when the wrap-around bond fires, and is reduced to the minimal
    nonnegative value for the new image.
    """
    n = state.stack
    M = n.size
    K = state.exclusion.size
    coin = rng.bit_array(step, np.arange(M, dtype=np.uint64)).astype(bool)
    tall = n >= 2
    tall_r = np.roll(tall, -1)
    both = tall & tall_r
    dir_right = (tall & ~tall_r) | (both & coin)
    dir_left = (~tall & tall_r) | (both & ~coin)
    outflow = dir_right.astype(np.int64) + np.roll(dir_left, 1).astype(np.int64)
    inflow = np.roll(dir_right, 1).astype(np.int64) + dir_left.astype(np.int64)
    new_stack = n + inflow - outflow

    zpos = np.arange(M, dtype=np.int64)
    if M > 1:
        zpos[1:] += np.cumsum(n[:-1])
    new_excl = state.exclusion.copy()
    for b in np.flatnonzero(dir_right | dir_left):
        i = (b + 1) % M
        t = int((zpos[i] + state.offset) % K)
        s = (t - 1) % K if dir_right[b] else (t + 1) % K
        if state.exclusion[t] != 0 or state.exclusion[s] != 1:
            raise RuntimeError("coupling invariant violated")
        new_excl[t] = 1
        new_excl[s] = 0
    offset = state.offset
    if dir_right[M - 1]:
        offset -= 1
    elif dir_left[M - 1]:
        offset += 1
    offset %= minimal_period(phi_image(new_stack))
    return CoupledState(new_stack, new_excl, offset)
