"""Self-stabilizing construction of minimal weakly ST-reachable DAGs:
protocol semantics, simulator, verification oracles, and experiment harness."""

from .configuration import (
    Configuration,
    ConfigurationError,
    load_configuration,
    local_view,
    save_configuration,
)
from .protocol import SELF, Action, LocalView, NeighborView, NodeState
from .simulator import (
    Trace,
    count_rounds,
    default_step_limit,
    make_scheduler,
    random_configuration,
    randomize_states,
    round_cutoff,
    run,
    step,
)
from .topology import (
    InstanceError,
    RoleAssignment,
    Topology,
    assign_roles,
    build_grid,
    build_random_connected,
    load_instance,
    save_instance,
)
from .verifier import (
    InvalidDigraphError,
    OutputDigraph,
    VerdictReport,
    check_minimal,
    check_weak_st_dag,
    extract_digraph,
    full_verdict,
    is_final,
    layer_legitimate,
    reference_construct,
)

__all__ = [
    "Action", "Configuration", "ConfigurationError", "InstanceError",
    "InvalidDigraphError", "LocalView", "NeighborView", "NodeState",
    "OutputDigraph", "RoleAssignment", "SELF", "Topology", "Trace",
    "VerdictReport", "assign_roles", "build_grid", "build_random_connected",
    "check_minimal", "check_weak_st_dag", "count_rounds", "default_step_limit",
    "extract_digraph", "full_verdict", "is_final", "layer_legitimate",
    "load_configuration", "load_instance", "local_view", "make_scheduler",
    "random_configuration", "randomize_states", "reference_construct",
    "round_cutoff", "run", "save_configuration", "save_instance", "step",
]
