"""Asynchronous averaging consensus on dynamic graphs.

Simulator for single-agent neighborhood averaging with selective
neighborhood contraction and random edge flipping, plus an experiment
harness and mechanical checks of the supporting inequalities.
"""

from .diagnostics import (
    CheckResult,
    DiagnosticsSeries,
    check_spectral_bounds,
    check_supermartingale_step,
    component_deltas,
    convergence_tail,
    diameter,
    dissent_z,
)
from .dynamics import (
    InitSpec,
    RunRecord,
    RunStreams,
    SelectionDistribution,
    SimParams,
    WorldState,
    averaging_update,
    init_states,
    run,
    select_agent,
    step,
)
from .graph import (
    ComponentPartition,
    ConnectivitySampleError,
    DynamicGraph,
    cheeger_constant,
    components,
    er_connected,
    flip_nonincident_pairs,
    is_connected,
    lambda2,
    laplacian,
    shrink_neighborhood,
)
from .harness import ExperimentConfig, SweepSummary, load_config, load_config_file, run_sweep
from .rng import RngStream

__version__ = "0.1.0"
