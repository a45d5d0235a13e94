"""Built-in property suite behind the `verify` subcommand.

Zero-setup consistency checks with embedded corpora: the Cheeger sandwich
on every connected graph with up to 5 vertices (enumerated exactly) plus
random samples on 6..8, the contraction-only supermartingale drop under
fuzzed runs, the 2/n^3 algebraic-connectivity floor on random connected
ER graphs with n in {20, 50, 100}, and a bitwise determinism replay.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import diagnostics, graph
from .dynamics import RunStreams, SimParams, WorldState, run, step
from .graph import DynamicGraph, er_connected
from .harness import run_json_payload
from .rng import RngStream


@dataclass
class VerifyCheck:
    name: str
    passed: bool
    detail: str


def all_connected_graphs(n: int):
    """Every labeled connected graph on n vertices (exhaustive)."""
    pairs = list(combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        g = DynamicGraph(n, (pairs[k] for k in range(len(pairs)) if mask >> k & 1))
        if graph.is_connected(g):
            yield g


def random_connected(n: int, p: float, rng: RngStream) -> DynamicGraph:
    return er_connected(n, p, rng)


def check_cheeger_sandwich(seed: int = 2024) -> VerifyCheck:
    rng = RngStream(seed).split("verify-sandwich")
    worst = float("inf")
    count = 0
    for n in range(2, 6):
        for g in all_connected_graphs(n):
            for res in diagnostics.check_spectral_bounds(g):
                if res.name.startswith("cheeger"):
                    worst = min(worst, res.margin)
                    if not res.holds:
                        return VerifyCheck("cheeger-sandwich", False, f"violated: {res.context}")
            count += 1
    for n, p in ((6, 0.5), (7, 0.45), (8, 0.4)):
        for _ in range(20):
            g = random_connected(n, p, rng)
            for res in diagnostics.check_spectral_bounds(g):
                if res.name.startswith("cheeger"):
                    worst = min(worst, res.margin)
                    if not res.holds:
                        return VerifyCheck("cheeger-sandwich", False, f"violated: {res.context}")
            count += 1
    return VerifyCheck(
        "cheeger-sandwich", True, f"{count} graphs (n<=5 exhaustive + random 6..8), min margin {worst:.3g}"
    )


def check_supermartingale_fuzz(seed: int = 2024) -> VerifyCheck:
    cases = [(5, 0.6, 0.1), (12, 0.4, 0.01), (30, 0.2, 0.001), (30, 0.2, 0.0)]
    total_steps = 0
    for idx, (n, p, q_shrink) in enumerate(cases):
        streams = RunStreams.from_seed(seed + idx)
        params = SimParams(n=n, p_init=p, q_shrink=q_shrink, q_flip=0.0, horizon=400)
        g = er_connected(n, p, streams.init)
        states = np.array([streams.init.uniform() for _ in range(n)])
        world = WorldState(0, g, states)
        z = diagnostics.dissent_z(states, g)
        for _ in range(400):
            before, z_before = world, z
            world, sel = step(world, params, streams)
            z = diagnostics.dissent_z(world.states, world.graph)
            res = diagnostics.check_supermartingale_step(
                before, world, z_before=z_before, z_after=z, selected=sel
            )
            total_steps += 1
            if not res.holds:
                return VerifyCheck(
                    "supermartingale-contraction",
                    False,
                    f"drop violated with q_flip=0: {res.context} margin={res.margin:.3g}",
                )
    return VerifyCheck(
        "supermartingale-contraction", True, f"{total_steps} contraction-only steps, zero violations"
    )


def check_lambda2_floor(seed: int = 2024) -> VerifyCheck:
    rng = RngStream(seed).split("verify-floor")
    worst = float("inf")
    count = 0
    for n, p in ((20, 0.3), (50, 0.12), (100, 0.07)):
        for _ in range(12):
            g = random_connected(n, p, rng)
            lam = graph.lambda2(g)
            margin = lam - 2.0 / n**3
            worst = min(worst, margin)
            count += 1
            if margin < -diagnostics.FLOOR_ABS_TOL:
                return VerifyCheck(
                    "lambda2-floor", False, f"n={n} lambda2={lam:.3g} below 2/n^3"
                )
    return VerifyCheck("lambda2-floor", True, f"{count} connected samples, min margin {worst:.3g}")


def check_determinism_replay(seed: int = 2024) -> VerifyCheck:
    params = SimParams(n=30, p_init=0.2, q_shrink=0.01, q_flip=1e-4, tolerance=1e-6, horizon=300)
    a = run(params, seed, sample_stride=7, mode="verify")
    b = run(params, seed, sample_stride=7, mode="verify")
    same_json = json.dumps(run_json_payload(a)) == json.dumps(run_json_payload(b))
    same_states = all(
        ta == tb and np.array_equal(sa, sb) for (ta, sa), (tb, sb) in zip(a.samples, b.samples)
    )
    ok = same_json and same_states and len(a.samples) == len(b.samples)
    return VerifyCheck(
        "determinism-replay",
        ok,
        "replayed run is bit-identical" if ok else "replay diverged",
    )


ALL_CHECKS = (
    check_cheeger_sandwich,
    check_supermartingale_fuzz,
    check_lambda2_floor,
    check_determinism_replay,
)


def run_verify(seed: int = 2024) -> list[VerifyCheck]:
    return [check(seed) for check in ALL_CHECKS]
