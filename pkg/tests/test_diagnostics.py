"""Dissent Z, the drop check, component spreads, and spectral bounds."""

import numpy as np
import pytest

from asyncavg.diagnostics import (
    check_spectral_bounds,
    check_supermartingale_step,
    component_deltas,
    convergence_tail,
    dissent_z,
)
from asyncavg.dynamics import WorldState
from asyncavg.graph import DynamicGraph
from asyncavg.rng import RngStream


def path_graph(n):
    return DynamicGraph(n, [(k, k + 1) for k in range(n - 1)])


def complete_graph(n):
    return DynamicGraph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


# -- dissent -------------------------------------------------------------------


def test_dissent_k2():
    assert dissent_z(np.array([0.0, 1.0]), complete_graph(2)) == 2.0


def test_dissent_consensus_zero():
    assert dissent_z(np.full(4, 0.3), complete_graph(4)) == 0.0


def test_dissent_path_example():
    assert dissent_z(np.array([0.0, 1.0, 3.0]), path_graph(3)) == 10.0


def test_dissent_size_mismatch():
    with pytest.raises(ValueError):
        dissent_z(np.zeros(3), complete_graph(2))


# -- supermartingale drop check ---------------------------------------------------


def test_drop_check_isolated_selection_holds():
    g = DynamicGraph(3, [(1, 2)])
    states = np.array([0.5, 0.1, 0.9])
    before = WorldState(0, g, states)
    after = WorldState(1, g, states.copy())  # isolated agent averaged itself
    res = check_supermartingale_step(before, after)
    assert res.holds and res.margin == 0.0


def test_drop_check_flip_counterexample():
    # an exogenous edge appearing between disagreeing non-selected agents
    # raises Z with no state motion: margin -2, flagged
    before_g = DynamicGraph(4, [(0, 1)])
    after_g = DynamicGraph(4, [(0, 1), (2, 3)])
    states = np.array([0.0, 0.0, 0.0, 1.0])
    res = check_supermartingale_step(
        WorldState(0, before_g, states), WorldState(1, after_g, states.copy())
    )
    assert not res.holds
    assert res.margin == pytest.approx(-2.0)


def test_drop_check_accepts_precomputed_z():
    g = path_graph(3)
    states = np.array([0.0, 1.0, 3.0])
    before = WorldState(0, g, states)
    after = WorldState(1, g, states.copy())
    z = dissent_z(states, g)
    res = check_supermartingale_step(before, after, z_before=z, z_after=z)
    assert res.holds and res.margin == 0.0


# -- component deltas -------------------------------------------------------------


def test_component_deltas_single_component():
    vals = component_deltas(np.array([0.1, 0.4, 0.2]), path_graph(3))
    assert vals == pytest.approx([0.3])


def test_component_deltas_isolated_vertices():
    assert component_deltas(np.array([0.3, 0.9, 0.5]), DynamicGraph(3)) == [0.0, 0.0, 0.0]


def test_component_deltas_two_components():
    g = DynamicGraph(3, [(0, 1)])
    vals = component_deltas(np.array([0.0, 1.0, 5.0]), g)
    assert sorted(vals) == pytest.approx([0.0, 1.0])


def test_connected_delta_equals_diameter():
    rng = RngStream(2)
    from asyncavg.graph import er_connected

    g = er_connected(12, 0.3, rng)
    states = np.array([rng.uniform() for _ in range(12)])
    assert component_deltas(states, g) == pytest.approx(
        [float(states.max() - states.min())]
    )


# -- spectral bounds ---------------------------------------------------------------


def test_spectral_bounds_k4():
    results = {r.name: r for r in check_spectral_bounds(complete_graph(4))}
    assert results["cheeger-upper"].holds
    assert results["cheeger-upper"].margin == pytest.approx(4.0 - 4.0)
    assert results["cheeger-lower"].holds
    assert results["cheeger-lower"].margin == pytest.approx(4.0 - 4.0 / 6.0)
    assert results["lambda2-floor"].holds


def test_spectral_bounds_disconnected_not_applicable():
    g = DynamicGraph(4, [(0, 1), (2, 3)])
    results = {r.name: r for r in check_spectral_bounds(g)}
    floor = results["lambda2-floor"]
    assert floor.holds and "not applicable" in floor.context
    # sandwich still evaluated and valid (everything is ~0)
    assert results["cheeger-upper"].holds and results["cheeger-lower"].holds


def test_spectral_bounds_large_connected_graph():
    from asyncavg.graph import er_connected

    g = er_connected(40, 0.2, RngStream(8))
    results = {r.name: r for r in check_spectral_bounds(g)}
    assert set(results) == {"lambda2-floor"}  # sandwich capped at n <= 16
    assert results["lambda2-floor"].holds


# -- convergence tail ---------------------------------------------------------------


def test_tail_constant_trajectory():
    traj = [np.array([0.2, 0.5])] * 6
    assert np.array_equal(convergence_tail(traj, 4), [0.0, 0.0])


def test_tail_two_sample_window():
    traj = [np.array([0.2]), np.array([0.5])]
    assert convergence_tail(traj, 2) == pytest.approx([0.3])


def test_tail_window_too_long():
    with pytest.raises(ValueError):
        convergence_tail([np.zeros(2)], 2)


def test_tail_after_stopping_bounded_by_tolerance():
    from asyncavg.dynamics import SimParams, run

    params = SimParams(n=20, p_init=0.4, q_shrink=0.0, q_flip=0.0, tolerance=1e-3, horizon=5000)
    rec = run(params, seed=14, sample_stride=10)
    assert rec.t_stop is not None
    tail = convergence_tail([s for _, s in rec.samples], 2)
    assert float(tail.max()) <= params.tolerance
