"""Filling a port-labeled graph with luminous myopic robots so that the final
positions form a maximal independent set."""
from .engine import (
    Outcome,
    ReplayDivergence,
    SchedulerPolicy,
    SimulationConfig,
    SimulationError,
    TraceEvent,
    read_trace,
    replay,
    run,
    write_trace,
)
from .graph import (
    DoorAttachment,
    GraphError,
    PortGraph,
    attach_doors,
    build_graph,
    load_graph,
    parse_graph_text,
    random_connected_graph,
)
from .ind import ind_step
from .multind import multind_step
from .robot import Color, RobotVars, State, make_snapshot
from .verify import (
    CheckReport,
    check_trace,
    compute_epochs,
    enumerate_mis,
    is_independent,
    is_maximal_independent,
)

__all__ = [
    "Outcome",
    "ReplayDivergence",
    "SchedulerPolicy",
    "SimulationConfig",
    "SimulationError",
    "TraceEvent",
    "read_trace",
    "replay",
    "run",
    "write_trace",
    "DoorAttachment",
    "GraphError",
    "PortGraph",
    "attach_doors",
    "build_graph",
    "load_graph",
    "parse_graph_text",
    "random_connected_graph",
    "ind_step",
    "multind_step",
    "Color",
    "RobotVars",
    "State",
    "make_snapshot",
    "CheckReport",
    "check_trace",
    "compute_epochs",
    "enumerate_mis",
    "is_independent",
    "is_maximal_independent",
]
