"""Substitution codes between ring alphabets.

A rule replaces each source letter s by a fixed nonempty word chi(s)
over the target alphabet; applying it around a ring concatenates the
words with the first anchored at index 0.  Rules must be uniquely
decodable so that ring images can be parsed back to a unique
(source, offset) pair.

Built-ins: ``phi_rule(hmax)`` sends a stack of height n to a zero
followed by n ones (so source density rho_hat maps to exclusion
density rho_hat/(1+rho_hat)); PHI_LEFT / PHI_RIGHT lift an exclusion
ring to a stack ring via 1 -> 20 / 1 -> 02 and 0 -> 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .lattice import as_stack, minimal_period
from .rng import RngContext

__all__ = [
    "NotInImage",
    "SubstitutionRule",
    "apply",
    "parse_image",
    "push_forward_sample",
    "pull_back_sample",
    "phi_image",
    "phi_rule",
    "PHI",
    "PHI_LEFT",
    "PHI_RIGHT",
]


class NotInImage(ValueError):
    """Raised when a ring is not a rotation of any coded source ring."""


def _as_letters(obj) -> list[int]:
    if isinstance(obj, str):
        s = obj[5:] if obj.startswith("ring:") else obj
        if ":" in s:
            s = s.split(":", 1)[1]
        if "," in s:
            return [int(x) for x in s.split(",")]
        return [int(ch) for ch in s]
    arr = np.asarray(obj)
    if arr.ndim != 1:
        raise ValueError("ring must be one-dimensional")
    return [int(x) for x in arr]


def _residuals(aa: set, bb: set) -> set:
    out = set()
    for x in aa:
        for y in bb:
            if len(x) < len(y) and y[: len(x)] == x:
                out.add(y[len(x) :])
    return out


def _uniquely_decodable(words: list[tuple[int, ...]]) -> bool:
    # Sardinas-Patterson
    code = set(words)
    if len(code) != len(words):
        return False
    s = _residuals(code, code)
    seen: set = set()
    while s:
        if s & code:
            return False
        seen |= s
        s = (_residuals(code, s) | _residuals(s, code)) - seen
    return True


@dataclass(frozen=True)
class SubstitutionRule:
    """Letter -> word replacement map over integer alphabets."""

    name: str
    replacement: dict[int, tuple[int, ...]] = field(repr=False)

    def __post_init__(self):
        rep = {int(s): tuple(int(a) for a in w) for s, w in self.replacement.items()}
        object.__setattr__(self, "replacement", rep)
        if not rep:
            raise ValueError("rule has no letters")
        for s, w in rep.items():
            if len(w) == 0:
                raise ValueError(f"letter {s} maps to the empty word")
        if not _uniquely_decodable(list(rep.values())):
            raise ValueError(f"image words of {self.name!r} are not uniquely decodable")

    def word(self, s: int) -> tuple[int, ...]:
        try:
            return self.replacement[int(s)]
        except KeyError:
            raise ValueError(f"letter {s} missing from rule {self.name!r}") from None

    def k(self, s: int) -> int:
        return len(self.word(s))

    @property
    def source_alphabet(self) -> tuple[int, ...]:
        return tuple(sorted(self.replacement))

    @cached_property
    def _trie(self):
        # node = (children, end) with end[0] the source letter closing a word
        root: tuple[dict, list] = ({}, [None])
        for s, w in self.replacement.items():
            node = root
            for a in w:
                node = node[0].setdefault(a, ({}, [None]))
            node[1][0] = s
        return root

    def to_json(self) -> str:
        rep = {}
        for s, w in sorted(self.replacement.items()):
            if all(0 <= a <= 9 for a in w):
                rep[str(s)] = "".join(str(a) for a in w)
            else:
                rep[str(s)] = ",".join(str(a) for a in w)
        return json.dumps({"name": self.name, "replacement": rep})

    @staticmethod
    def from_json(text: str) -> "SubstitutionRule":
        doc = json.loads(text)
        rep = {}
        for s, w in doc["replacement"].items():
            if "," in w:
                rep[int(s)] = tuple(int(a) for a in w.split(","))
            else:
                rep[int(s)] = tuple(int(ch) for ch in w)
        return SubstitutionRule(doc.get("name", ""), rep)


def apply(rule: SubstitutionRule, src) -> np.ndarray:
    """Concatenate the image words of ``src`` around the ring."""
    letters = _as_letters(src)
    if not letters:
        raise ValueError("empty source ring")
    out: list[int] = []
    for s in letters:
        out.extend(rule.word(s))
    return np.asarray(out, dtype=np.int64)


def _parse_linear(rule: SubstitutionRule, seq: list[int]) -> list[int] | None:
    """Factor ``seq`` exactly into image words; None when impossible."""
    trie = rule._trie
    n = len(seq)
    reach = [False] * (n + 1)
    pred = [0] * (n + 1)
    letter_at = [0] * (n + 1)
    reach[0] = True
    for i in range(n):
        if not reach[i]:
            continue
        node = trie
        j = i
        while j < n:
            node = node[0].get(seq[j])
            if node is None:
                break
            j += 1
            if node[1][0] is not None and not reach[j]:
                reach[j] = True
                pred[j] = i
                letter_at[j] = node[1][0]
    if not reach[n]:
        return None
    letters: list[int] = []
    j = n
    while j > 0:
        letters.append(letter_at[j])
        j = pred[j]
    letters.reverse()
    return letters


def parse_image(rule: SubstitutionRule, tgt) -> tuple[np.ndarray, int]:
    """Unique (source, offset) with rotate(apply(rule, source), offset) = tgt.

    The offset is the minimal nonnegative one; rotations beyond the
    minimal period of ``tgt`` repeat and are not searched.
    """
    seq = _as_letters(tgt)
    if not seq:
        raise NotInImage("empty ring")
    period = minimal_period(seq)
    heads = rule._trie[0]
    for off in range(period):
        if seq[off % len(seq)] not in heads:
            continue
        w = seq[off:] + seq[:off]
        letters = _parse_linear(rule, w)
        if letters is not None:
            return np.asarray(letters, dtype=np.int64), off
    raise NotInImage(f"ring of length {len(seq)} is not in the image of {rule.name!r}")


def push_forward_sample(
    rule: SubstitutionRule, src_sampler: Callable[[RngContext], Sequence], rng: RngContext
) -> np.ndarray:
    """Apply the rule to one source sample and rotate uniformly.

    The uniform rotation over the image length realizes the
    length-biased mixture of anchored images, so k-cylinder statistics
    of repeated samples converge to the pushed-forward statistics of
    the source law.
    """
    img = apply(rule, src_sampler(rng.child(0)))
    off = int(rng.child(1).uniform(0, 0) * img.size)
    if off >= img.size:
        off = img.size - 1
    return np.roll(img, off)


def pull_back_sample(
    rule: SubstitutionRule,
    tgt_sampler: Callable[[RngContext], Sequence],
    rng: RngContext,
    max_tries: int = 100_000,
    check_image: bool = False,
) -> np.ndarray:
    """Sample a source ring by alignment rejection.

    Draws targets until one parses with offset 0 (index 0 on a word
    boundary); misaligned draws are rejected, which undoes the length
    bias of the image.  With ``check_image`` a draw that parses at no
    rotation raises NotInImage instead of being silently rejected.
    """
    for t in range(max_tries):
        tgt = _as_letters(tgt_sampler(rng.child(t)))
        letters = _parse_linear(rule, tgt)
        if letters is not None:
            return np.asarray(letters, dtype=np.int64)
        if check_image:
            parse_image(rule, tgt)  # raises NotInImage when warranted
    raise RuntimeError(f"no aligned sample after {max_tries} tries")


def phi_image(stack) -> np.ndarray:
    """Total stack-to-exclusion code (no height cap): n -> 0 1^n."""
    n = as_stack(stack)
    img = np.ones(n.size + int(n.sum()), dtype=np.uint8)
    zpos = np.arange(n.size, dtype=np.int64)
    if n.size > 1:
        zpos[1:] += np.cumsum(n[:-1])
    img[zpos] = 0
    return img


def phi_rule(hmax: int) -> SubstitutionRule:
    """Stack-to-exclusion code: height n -> a zero followed by n ones."""
    if hmax < 1:
        raise ValueError("hmax must be >= 1")
    return SubstitutionRule("phi", {n: (0,) + (1,) * n for n in range(hmax + 1)})


PHI = phi_rule(64)
PHI_LEFT = SubstitutionRule("phi_left", {1: (2, 0), 0: (1,)})
PHI_RIGHT = SubstitutionRule("phi_right", {1: (0, 2), 0: (1,)})
