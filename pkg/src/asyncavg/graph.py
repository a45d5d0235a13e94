"""Time-varying simple undirected graphs on agents 0..n-1.

Holds the graph container plus everything the simulator and the theory
checks need from it: Erdos-Renyi sampling conditioned on connectivity,
connected components, the Laplacian and its algebraic connectivity, an
exact brute-force Cheeger constant for small graphs, and the two per-step
evolution mechanisms (shrink at the selected agent, edge flips away from
it).

Mutation operations return new graphs; adjacency sets are shared
copy-on-write between the input and the result, so a shrink touches only
the O(deg) sets it actually edits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream


class ConnectivitySampleError(RuntimeError):
    """Raised when ER rejection sampling never produces a connected graph."""


class DynamicGraph:
    """Simple undirected graph: no self-loops, no duplicate edges."""

    __slots__ = ("n", "_adj", "_m")

    def __init__(self, n: int, edges=()):
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        self.n = n
        self._adj: list[set[int]] = [set() for _ in range(n)]
        self._m = 0
        for u, v in edges:
            self.add_edge(u, v)

    # -- container basics ------------------------------------------------

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range for n={self.n}")

    def has_edge(self, u: int, v: int) -> bool:
        self._check_vertex(u)
        self._check_vertex(v)
        return v in self._adj[u]

    def add_edge(self, u: int, v: int) -> None:
        self._check_vertex(u)
        self._check_vertex(v)
        if u == v:
            raise ValueError("self-loops are not allowed")
        if v not in self._adj[u]:
            self._adj[u].add(v)
            self._adj[v].add(u)
            self._m += 1

    def remove_edge(self, u: int, v: int) -> None:
        if v in self._adj[u]:
            self._adj[u].discard(v)
            self._adj[v].discard(u)
            self._m -= 1

    def toggle_edge(self, u: int, v: int) -> None:
        if v in self._adj[u]:
            self.remove_edge(u, v)
        else:
            self.add_edge(u, v)

    def degree(self, i: int) -> int:
        self._check_vertex(i)
        return len(self._adj[i])

    def max_degree(self) -> int:
        return max(len(s) for s in self._adj)

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Neighbors of i in ascending order (stable draw/sum order)."""
        self._check_vertex(i)
        return tuple(sorted(self._adj[i]))

    def closed_neighborhood(self, i: int) -> set[int]:
        """{i} plus current neighbors; always contains i."""
        self._check_vertex(i)
        return self._adj[i] | {i}

    @property
    def edge_count(self) -> int:
        return self._m

    def edges(self):
        """Yield edges as (u, v) with u < v, in ascending lexicographic order."""
        for u in range(self.n):
            for v in sorted(self._adj[u]):
                if v > u:
                    yield (u, v)

    def copy(self) -> "DynamicGraph":
        g = DynamicGraph.__new__(DynamicGraph)
        g.n = self.n
        g._adj = [s.copy() for s in self._adj]
        g._m = self._m
        return g

    def _cow_clone(self) -> "_CowGraph":
        g = _CowGraph.__new__(_CowGraph)
        g.n = self.n
        g._adj = list(self._adj)  # sets shared until first write
        g._m = self._m
        g._owned = set()
        return g

    def __eq__(self, other) -> bool:
        if not isinstance(other, DynamicGraph):
            return NotImplemented
        return self.n == other.n and self._adj == other._adj

    # -- debug serialization ----------------------------------------------

    def to_edge_text(self) -> str:
        """One '<u> <v>' pair per line, 1-indexed, sorted lexicographically."""
        return "\n".join(f"{u + 1} {v + 1}" for u, v in self.edges())

    @classmethod
    def from_edge_text(cls, n: int, text: str) -> "DynamicGraph":
        g = cls(n)
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            u, v = line.split()
            g.add_edge(int(u) - 1, int(v) - 1)
        return g


class _CowGraph(DynamicGraph):
    """Clone that copies an adjacency set only when it first mutates it."""

    __slots__ = ("_owned",)

    def _own(self, v: int) -> None:
        if v not in self._owned:
            self._adj[v] = self._adj[v].copy()
            self._owned.add(v)

    def add_edge(self, u: int, v: int) -> None:
        self._own(u)
        self._own(v)
        super().add_edge(u, v)

    def remove_edge(self, u: int, v: int) -> None:
        self._own(u)
        self._own(v)
        super().remove_edge(u, v)


@dataclass
class ComponentPartition:
    """Connected-components labelling: ids 0..count-1 in discovery order."""

    assignments: list[int]
    count: int


def components(g: DynamicGraph) -> ComponentPartition:
    assignments = [-1] * g.n
    count = 0
    for root in range(g.n):
        if assignments[root] >= 0:
            continue
        stack = [root]
        assignments[root] = count
        while stack:
            u = stack.pop()
            for v in g._adj[u]:
                if assignments[v] < 0:
                    assignments[v] = count
                    stack.append(v)
        count += 1
    return ComponentPartition(assignments, count)


def is_connected(g: DynamicGraph) -> bool:
    return components(g).count == 1


def er_connected(n: int, p: float, rng: RngStream, max_attempts: int = 10_000) -> DynamicGraph:
    """Sample G(n, p) repeatedly until the draw is connected.

    Pairs are visited in ascending (u, v) order, one Bernoulli(p) draw per
    pair, so the sampled graph is a pure function of the stream position.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must be in [0, 1]")
    for _ in range(max_attempts):
        g = DynamicGraph(n)
        for u in range(n - 1):
            for v in range(u + 1, n):
                if rng.bernoulli(p):
                    g.add_edge(u, v)
        if is_connected(g):
            return g
    threshold = math.log(n) / n if n > 1 else 0.0
    raise ConnectivitySampleError(
        f"no connected G({n}, {p}) sample in {max_attempts} attempts; "
        f"connectivity threshold ln(n)/n ~ {threshold:.4f}"
    )


def laplacian(g: DynamicGraph) -> np.ndarray:
    """Combinatorial Laplacian: degrees on the diagonal, -1 on edges."""
    lap = np.zeros((g.n, g.n), dtype=np.float64)
    for u, v in g.edges():
        lap[u, u] += 1.0
        lap[v, v] += 1.0
        lap[u, v] = -1.0
        lap[v, u] = -1.0
    return lap


def laplacian_eigenvalues(g: DynamicGraph) -> np.ndarray:
    """All Laplacian eigenvalues, ascending (dense symmetric solver)."""
    return np.linalg.eigvalsh(laplacian(g))


def lambda2(g: DynamicGraph) -> float:
    """Algebraic connectivity: second-smallest Laplacian eigenvalue.

    Zero (up to eigensolver noise) exactly when the graph is disconnected.
    """
    if g.n < 2:
        raise ValueError("algebraic connectivity needs n >= 2")
    return float(laplacian_eigenvalues(g)[1])


_CHEEGER_MAX_N = 16


def cheeger_constant(g: DynamicGraph) -> float:
    """Exact isoperimetric number min |boundary(S)| / |S| over |S| <= n/2.

    Enumerates all 2^n vertex subsets via bitmasks, so it is capped at
    n <= 16; boundary sizes come from per-vertex adjacency bitmasks.
    """
    n = g.n
    if not 2 <= n <= _CHEEGER_MAX_N:
        raise ValueError(f"exhaustive Cheeger constant needs 2 <= n <= {_CHEEGER_MAX_N}")
    adj_mask = [0] * n
    for u, v in g.edges():
        adj_mask[u] |= 1 << v
        adj_mask[v] |= 1 << u
    half = n // 2
    full = (1 << n) - 1
    best = math.inf
    for mask in range(1, 1 << n):
        size = mask.bit_count()
        if size > half:
            continue
        outside = full & ~mask
        boundary = 0
        m = mask
        while m:
            u = (m & -m).bit_length() - 1
            boundary += (adj_mask[u] & outside).bit_count()
            m &= m - 1
        ratio = boundary / size
        if ratio < best:
            best = ratio
    return best


def shrink_neighborhood(g: DynamicGraph, i: int, q_shrink: float, rng: RngStream) -> DynamicGraph:
    """Remove each edge at agent i independently with probability q_shrink.

    Never adds edges and never touches edges not incident to i, so the
    closed neighborhood of i can only contract.  The draw for the edge to
    neighbor j is the stream's position-j value, not a sequential draw:
    runs that differ only in q_shrink then see identical uniforms per
    potential removal, so a removal at the smaller q implies the same
    removal at the larger one (monotone coupling across sweeps).
    """
    g._check_vertex(i)
    if not 0.0 <= q_shrink <= 1.0:
        raise ValueError("q_shrink must be in [0, 1]")
    out = g._cow_clone()
    if q_shrink > 0.0:
        for j in g.neighbors(i):
            if rng.uniform_at(j) < q_shrink:
                out.remove_edge(i, j)
    return out


def _unrank_pair(k: int, others: list[int]) -> tuple[int, int]:
    # k-th pair (a < b) of `others` in lexicographic order
    row = 0
    remaining = len(others) - 1
    while k >= remaining:
        k -= remaining
        row += 1
        remaining -= 1
    return others[row], others[row + 1 + k]


def flip_nonincident_pairs(
    g: DynamicGraph, i: int, q_flip: float, rng: RngStream, naive: bool = False
) -> DynamicGraph:
    """Toggle each unordered pair avoiding i independently with prob q_flip.

    Default path draws the toggle count K ~ Binomial(C(n-1, 2), q_flip)
    and then K distinct uniform pairs, which is distribution-equivalent to
    the per-pair Bernoulli scan but O(K) instead of O(n^2).  The naive
    scan is kept behind ``naive=True`` for equivalence testing.
    """
    g._check_vertex(i)
    if not 0.0 <= q_flip <= 1.0:
        raise ValueError("q_flip must be in [0, 1]")
    out = g._cow_clone()
    others = [v for v in range(g.n) if v != i]
    m = len(others) * (len(others) - 1) // 2
    if m == 0 or q_flip == 0.0:
        return out
    if naive:
        for a in range(len(others) - 1):
            for b in range(a + 1, len(others)):
                if rng.bernoulli(q_flip):
                    out.toggle_edge(others[a], others[b])
        return out
    k = rng.binomial(m, q_flip)
    if k == 0:
        return out
    if 2 * k >= m:
        # dense regime: partial Fisher-Yates over all pair indices
        idx = list(range(m))
        for j in range(k):
            r = j + rng.below(m - j)
            idx[j], idx[r] = idx[r], idx[j]
        chosen = idx[:k]
    else:
        seen: set[int] = set()
        while len(seen) < k:
            seen.add(rng.below(m))
        chosen = list(seen)
    for pair_index in sorted(chosen):
        u, v = _unrank_pair(pair_index, others)
        out.toggle_edge(u, v)
    return out
