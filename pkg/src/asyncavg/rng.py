"""Deterministic splittable random streams.

Every run of the simulator draws all of its randomness from `RngStream`
instances, so a run is a pure function of (seed, configuration).  The
generator is SplitMix64; the exact state-transition function is written
out in ``docs/rng.md`` so the sequence can be reproduced bit for bit in
any language.

Streams are identified by (root seed, path of labels).  Splitting derives
a child stream from that identity alone: it never advances the parent,
and siblings with different labels get unrelated sequences.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_INV_2_53 = 2.0 ** -53


def _mix64(x: int) -> int:
    """SplitMix64 output function applied to x + GOLDEN (one full step)."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def _fnv1a64(label: str) -> int:
    h = _FNV_OFFSET
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def _stream_seed(root_seed: int, path: tuple[str, ...]) -> int:
    h = _mix64(root_seed & _MASK64)
    for label in path:
        h = _mix64(h ^ _fnv1a64(label))
    return h


class RngStream:
    """SplitMix64 stream addressed by (root seed, label path).

    A stream is single-owner: give each concurrent run its own split,
    never share one across tasks.
    """

    __slots__ = ("root_seed", "path", "_seed0", "_state")

    def __init__(self, seed: int, _path: tuple[str, ...] = ()):
        self.root_seed = seed & _MASK64
        self.path = _path
        self._seed0 = _stream_seed(self.root_seed, _path)
        self._state = self._seed0

    def __repr__(self) -> str:
        return f"RngStream(seed={self.root_seed}, path={'/'.join(self.path) or '<root>'})"

    def split(self, label: str) -> "RngStream":
        """Derive the child stream for `label`; the parent is not advanced."""
        if not label:
            raise ValueError("split label must be nonempty")
        return RngStream(self.root_seed, self.path + (label,))

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
        return z ^ (z >> 31)

    def at(self, k: int) -> int:
        """Random access: the value sequential draw number k would produce.

        Does not advance the stream.  Position-keyed draws keep sweeps
        over one parameter from realigning the randomness of another
        (common-random-numbers coupling).
        """
        if k < 0:
            raise ValueError("draw index must be >= 0")
        z = (self._seed0 + (k + 1) * _GOLDEN) & _MASK64
        z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1), 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform_at(self, k: int) -> float:
        """Uniform in [0, 1) at sequence position k, without advancing."""
        return (self.at(k) >> 11) * _INV_2_53

    def uniform_open(self) -> float:
        """Uniform double in (0, 1]; safe as a log() argument."""
        return ((self.next_u64() >> 11) + 1) * _INV_2_53

    def bernoulli(self, q: float) -> bool:
        return self.uniform() < q

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def binomial(self, m: int, q: float) -> int:
        """Exact Binomial(m, q) draw via geometric gaps between successes.

        Consumes one uniform per success plus one terminal draw, so the
        cost is O(m*q) rather than O(m); exact for any q in [0, 1].
        """
        if m < 0:
            raise ValueError("binomial() needs m >= 0")
        if m == 0 or q <= 0.0:
            return 0
        if q >= 1.0:
            return m
        log_miss = math.log1p(-q)
        pos = 0
        hits = 0
        while True:
            gap = int(math.ceil(math.log(self.uniform_open()) / log_miss))
            if gap < 1:
                gap = 1
            pos += gap
            if pos > m:
                return hits
            hits += 1
