"""Runtime verification of the analytical machinery behind the dynamics.

The quantities checked here are the ones the convergence argument leans
on: the edgewise squared-disagreement Z and its per-step drop, the
per-component state spread, the Cheeger sandwich around the algebraic
connectivity, the 2/n^3 connectivity floor, and empirical tail
convergence of trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import DynamicGraph, cheeger_constant, components, is_connected, lambda2

SUPERMARTINGALE_REL_TOL = 1e-9
SANDWICH_ABS_TOL = 1e-8
FLOOR_ABS_TOL = 1e-12


@dataclass
class CheckResult:
    """Outcome of one theory check: signed slack, positive = satisfied."""

    name: str
    holds: bool
    margin: float
    context: str = ""


@dataclass
class DiagnosticsSeries:
    """Per-run diagnostic series, sampled on the run's stride.

    ``component_delta`` (max over components of the intra-component state
    spread) is only populated in verify mode.
    """

    z: list[tuple[int, float]] = field(default_factory=list)
    diameter: list[tuple[int, float]] = field(default_factory=list)
    drop_violations: list[CheckResult] = field(default_factory=list)
    component_delta: list[tuple[int, float]] | None = None


def dissent_z(states: np.ndarray, g: DynamicGraph) -> float:
    """Sum of (x_u - x_v)^2 over ordered adjacent pairs.

    Computed as twice the sum over undirected edges, accumulating in
    ascending (u, v) order so the float result is reproducible.
    """
    if len(states) != g.n:
        raise ValueError(f"state vector length {len(states)} != graph n {g.n}")
    total = 0.0
    for u in range(g.n):
        xu = float(states[u])
        for v in g.neighbors(u):
            if v > u:
                d = xu - float(states[v])
                total += d * d
    return 2.0 * total


def diameter(states: np.ndarray) -> float:
    """Opinion diameter max_i x_i - min_i x_i."""
    return float(np.max(states) - np.min(states))


def check_supermartingale_step(
    before,
    after,
    z_before: float | None = None,
    z_after: float | None = None,
    selected: int | None = None,
) -> CheckResult:
    """Check the pathwise drop Z_t - Z_{t+1} >= 2 * sum_i (dx_i)^2.

    `before`/`after` are consecutive WorldState snapshots.  Precomputed Z
    values may be passed in to avoid recomputation; they must equal what
    ``dissent_z`` returns on the same snapshots.  The inequality is exact
    for contraction-only steps (no flips); a flip that adds an edge
    between disagreeing non-selected agents can legitimately violate it,
    which is why violations are recorded rather than fatal.
    """
    if z_before is None:
        z_before = dissent_z(before.states, before.graph)
    if z_after is None:
        z_after = dissent_z(after.states, after.graph)
    dx = after.states - before.states
    move = 2.0 * float(np.dot(dx, dx))
    margin = (z_before - z_after) - move
    tol = SUPERMARTINGALE_REL_TOL * max(1.0, z_before)
    who = "" if selected is None else f" selected={selected}"
    return CheckResult(
        name="supermartingale-drop",
        holds=margin >= -tol,
        margin=margin,
        context=f"t={before.t}->{after.t}{who} Z={z_before:.6g}->{z_after:.6g}",
    )


def component_deltas(states: np.ndarray, g: DynamicGraph) -> list[float]:
    """Max intra-component state difference, one value per component.

    A component is delta-trivial exactly when its value is <= delta.
    """
    if len(states) != g.n:
        raise ValueError(f"state vector length {len(states)} != graph n {g.n}")
    part = components(g)
    lo = [float("inf")] * part.count
    hi = [float("-inf")] * part.count
    for v in range(g.n):
        c = part.assignments[v]
        x = float(states[v])
        if x < lo[c]:
            lo[c] = x
        if x > hi[c]:
            hi[c] = x
    return [hi[c] - lo[c] for c in range(part.count)]


def check_spectral_bounds(g: DynamicGraph) -> list[CheckResult]:
    """Cheeger sandwich (exhaustive i(G), n <= 16) and the 2/n^3 floor.

    The floor presupposes connectivity; disconnected input produces a
    not-applicable result rather than a failure.
    """
    results: list[CheckResult] = []
    if 2 <= g.n <= 16:
        iso = cheeger_constant(g)
        lam = lambda2(g)
        max_deg = g.max_degree()
        lower = iso * iso / (2.0 * max_deg) if max_deg > 0 else 0.0
        results.append(
            CheckResult(
                name="cheeger-upper",
                holds=2.0 * iso - lam >= -SANDWICH_ABS_TOL,
                margin=2.0 * iso - lam,
                context=f"n={g.n} i(G)={iso:.6g} lambda2={lam:.6g}",
            )
        )
        results.append(
            CheckResult(
                name="cheeger-lower",
                holds=lam - lower >= -SANDWICH_ABS_TOL,
                margin=lam - lower,
                context=f"n={g.n} i(G)={iso:.6g} max_deg={max_deg} lambda2={lam:.6g}",
            )
        )
    if g.n >= 2 and is_connected(g):
        lam = lambda2(g)
        floor = 2.0 / g.n**3
        results.append(
            CheckResult(
                name="lambda2-floor",
                holds=lam - floor >= -FLOOR_ABS_TOL,
                margin=lam - floor,
                context=f"n={g.n} lambda2={lam:.6g} floor={floor:.6g}",
            )
        )
    else:
        results.append(
            CheckResult(
                name="lambda2-floor",
                holds=True,
                margin=0.0,
                context="not applicable (graph disconnected)",
            )
        )
    return results


def convergence_tail(trajectory, window: int) -> np.ndarray:
    """Per-agent max - min over the last `window` sampled state vectors.

    Small values certify empirical convergence (the trajectory is
    observed to be Cauchy at the sampling resolution).
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    vectors = [np.asarray(v, dtype=np.float64) for v in trajectory]
    if window > len(vectors):
        raise ValueError(f"window {window} exceeds trajectory length {len(vectors)}")
    tail = np.stack(vectors[-window:])
    return tail.max(axis=0) - tail.min(axis=0)
