"""The asynchronous averaging process on an evolving graph.

One step: select a single agent, replace its state with the mean over its
closed neighborhood in the current graph, then evolve the graph (shrink
at the selected agent, flips elsewhere).  The update uses the
pre-mutation neighborhood; the mutated edge set becomes the next
interaction graph.

All state arithmetic is float64 with a fixed summation order (ascending
agent id, single final divide), so trajectories replay bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    CheckResult,
    DiagnosticsSeries,
    check_supermartingale_step,
    component_deltas,
    diameter,
    dissent_z,
)
from .graph import DynamicGraph, er_connected, flip_nonincident_pairs, shrink_neighborhood
from .rng import RngStream

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SelectionDistribution:
    """Per-agent selection probabilities; strictly positive, summing to 1."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if not self.probs:
            raise ValueError("selection distribution must be nonempty")
        if any(p <= 0.0 for p in self.probs):
            raise ValueError("selection probabilities must be strictly positive")
        total = 0.0
        for p in self.probs:
            total += p
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"selection probabilities sum to {total!r}, not 1")

    @classmethod
    def uniform(cls, n: int) -> "SelectionDistribution":
        if n < 1:
            raise ValueError("need n >= 1")
        return cls(tuple([1.0 / n] * n))

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class InitSpec:
    """Initial-state distribution: uniform01, constant c, or explicit vector."""

    kind: str
    value: float | tuple[float, ...] | None = None

    _KINDS = ("uniform01", "constant", "explicit")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown init kind {self.kind!r}; expected one of {self._KINDS}")
        if self.kind == "constant" and not isinstance(self.value, float):
            raise ValueError("constant init needs a float value")
        if self.kind == "explicit" and not isinstance(self.value, tuple):
            raise ValueError("explicit init needs a vector of values")

    @classmethod
    def uniform01(cls) -> "InitSpec":
        return cls("uniform01")

    @classmethod
    def constant(cls, c: float) -> "InitSpec":
        return cls("constant", float(c))

    @classmethod
    def explicit(cls, values) -> "InitSpec":
        return cls("explicit", tuple(float(v) for v in values))


@dataclass(frozen=True)
class SimParams:
    """Every knob of a single run."""

    n: int
    p_init: float
    q_shrink: float = 0.0
    q_flip: float = 0.0
    tolerance: float = 1e-3
    horizon: int = 10_000
    selection: SelectionDistribution | None = None
    init: InitSpec = field(default_factory=InitSpec.uniform01)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.p_init <= 1.0:
            raise ValueError("p_init must be in [0, 1]")
        if not 0.0 <= self.q_shrink <= 1.0:
            raise ValueError("q_shrink must be in [0, 1]")
        if not 0.0 <= self.q_flip <= 1.0:
            raise ValueError("q_flip must be in [0, 1]")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.selection is not None and len(self.selection) != self.n:
            raise ValueError("selection distribution length must equal n")

    def selection_or_uniform(self) -> SelectionDistribution:
        return self.selection if self.selection is not None else SelectionDistribution.uniform(self.n)

    def cell_dict(self) -> dict:
        """The six cell parameters echoed into run outputs."""
        return {
            "n": self.n,
            "p_init": self.p_init,
            "q_shrink": self.q_shrink,
            "q_flip": self.q_flip,
            "tolerance": self.tolerance,
            "horizon": self.horizon,
        }


@dataclass
class WorldState:
    """One snapshot of the process: step counter, graph, states."""

    t: int
    graph: DynamicGraph
    states: np.ndarray

    def __post_init__(self):
        if self.graph.n != len(self.states):
            raise ValueError("graph size and state vector length differ")


@dataclass
class RunStreams:
    """The four fixed substreams of a run, split from its seed.

    Keeping mechanisms on separate streams means e.g. changing q_flip
    cannot perturb which agents get selected.
    """

    init: RngStream
    selection: RngStream
    shrink: RngStream
    flip: RngStream

    LABELS = ("init", "selection", "shrink", "flip")

    @classmethod
    def from_seed(cls, seed: int) -> "RunStreams":
        root = RngStream(seed)
        return cls(*(root.split(label) for label in cls.LABELS))


def init_states(n: int, init: InitSpec, rng: RngStream) -> np.ndarray:
    """Initial opinions: i.i.d. U[0,1), constant, or a copied explicit vector."""
    if n < 1:
        raise ValueError("need n >= 1")
    if init.kind == "uniform01":
        return np.array([rng.uniform() for _ in range(n)], dtype=np.float64)
    if init.kind == "constant":
        return np.full(n, init.value, dtype=np.float64)
    if len(init.value) != n:
        raise ValueError(f"explicit init has length {len(init.value)}, expected {n}")
    return np.array(init.value, dtype=np.float64)


def select_agent(sel: SelectionDistribution, rng: RngStream) -> int:
    """Draw one agent id; consumes exactly one uniform (CDF inversion)."""
    u = rng.uniform()
    acc = 0.0
    for i, p in enumerate(sel.probs):
        acc += p
        if u < acc:
            return i
    return len(sel.probs) - 1  # guard against float shortfall in the CDF


def averaging_update(states: np.ndarray, g: DynamicGraph, i: int) -> np.ndarray:
    """Replace x_i with the mean over its closed neighborhood; others hold.

    Sum runs in ascending agent id with a single final divide, so the
    result is a reproducible float64 regardless of platform.
    """
    g._check_vertex(i)
    nbrs = g.neighbors(i)
    total = float(states[i])
    for j in nbrs:
        total += float(states[j])
    out = states.copy()
    out[i] = total / (len(nbrs) + 1)
    return out


def step(world: WorldState, params: SimParams, streams: RunStreams) -> tuple[WorldState, int]:
    """Advance one step; returns (successor state, selected agent).

    Order matters: the state update averages over the *pre-mutation*
    neighborhood, then shrink and flip produce the next graph.  Each
    mutation draws from a fresh per-step substream, so a divergence at
    one step never realigns the randomness of later steps.
    """
    i = select_agent(params.selection_or_uniform(), streams.selection)
    new_states = averaging_update(world.states, world.graph, i)
    label = f"t{world.t}"
    g = shrink_neighborhood(world.graph, i, params.q_shrink, streams.shrink.split(label))
    g = flip_nonincident_pairs(g, i, params.q_flip, streams.flip.split(label))
    return WorldState(world.t + 1, g, new_states), i


@dataclass
class RunRecord:
    """Everything one run produced that the harness and plots consume."""

    params: SimParams
    seed: int
    sample_stride: int
    mode: str
    t_stop: int | None
    samples: list[tuple[int, np.ndarray]]
    diagnostics: DiagnosticsSeries
    wall_time: float  # in-memory only; never serialized (outputs stay deterministic)

    @property
    def drop_violation_count(self) -> int:
        return len(self.diagnostics.drop_violations)


def run(params: SimParams, seed: int, sample_stride: int = 10, mode: str = "fast") -> RunRecord:
    """Execute one full run from a seed.

    Builds a connected ER initial graph and initial states from the
    ``init`` substream (graph first, then states), then steps until the
    horizon or until the opinion diameter drops below the tolerance.
    The stopping time is exact (checked after every step, and at t=0);
    the stride only controls how often state/diagnostic samples are kept.
    In verify mode the supermartingale drop is checked on every step and
    per-component spreads are recorded; fast mode checks only the steps
    that start on a stride boundary.
    """
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")
    if mode not in ("fast", "verify"):
        raise ValueError(f"unknown mode {mode!r}; expected 'fast' or 'verify'")
    t_start = time.perf_counter()
    streams = RunStreams.from_seed(seed)
    graph = er_connected(params.n, params.p_init, streams.init)
    states = init_states(params.n, params.init, streams.init)
    world = WorldState(0, graph, states)

    verify = mode == "verify"
    diag = DiagnosticsSeries(component_delta=[] if verify else None)
    samples: list[tuple[int, np.ndarray]] = []
    z_current = dissent_z(world.states, world.graph)

    def record(world: WorldState, z: float) -> None:
        samples.append((world.t, world.states.copy()))
        diag.z.append((world.t, z))
        diag.diameter.append((world.t, diameter(world.states)))
        if verify:
            deltas = component_deltas(world.states, world.graph)
            diag.component_delta.append((world.t, max(deltas)))

    record(world, z_current)
    t_stop: int | None = 0 if diameter(world.states) < params.tolerance else None

    # z_current is kept valid at every stride boundary (and at every step
    # in verify mode); it is only consumed under those same conditions.
    while t_stop is None and world.t < params.horizon:
        check_here = verify or world.t % sample_stride == 0
        before = world
        z_before = z_current
        world, selected = step(world, params, streams)
        sample_here = world.t % sample_stride == 0
        if check_here or sample_here:
            z_current = dissent_z(world.states, world.graph)
        if check_here:
            result = check_supermartingale_step(
                before, world, z_before=z_before, z_after=z_current, selected=selected
            )
            if not result.holds:
                diag.drop_violations.append(result)
        if diameter(world.states) < params.tolerance:
            t_stop = world.t
        if sample_here:
            record(world, z_current)

    # final snapshot, if the loop did not just record it
    if samples[-1][0] != world.t:
        record(world, dissent_z(world.states, world.graph))
    return RunRecord(
        params=params,
        seed=seed,
        sample_stride=sample_stride,
        mode=mode,
        t_stop=t_stop,
        samples=samples,
        diagnostics=diag,
        wall_time=time.perf_counter() - t_start,
    )
