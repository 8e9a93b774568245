"""Stationary points, transition graphs and bifurcations of the ring potential."""

from .desync import (
    DesyncPrediction,
    OutsideWindowError,
    WeakCouplingReport,
    barrier_at_zero,
    desync_predictions,
    droplet_path,
    isotropy_templates,
    weak_coupling_audit,
)
from .graph import (
    DisconnectedGraphError,
    Edge,
    TransitionGraph,
    barrier_height,
    connect_saddles,
    descend,
    minimax_saddle,
    synchronised_minima,
)
from .oracles import (
    N3Solution,
    N4Root,
    n2_oracle,
    n2_values,
    n3_critical_coupling,
    n3_oracle,
    n4_feasibility_end,
    n4_hessian_det,
    n4_hessian_det_exact,
    n4_reduced_roots,
    n4_root_count_events,
)
from .scan import BifurcationDiagram, Event, scan_bifurcations
from .stationary import (
    NotStationaryError,
    StationaryPoint,
    StationaryPointSet,
    classify,
    deduplicate,
    find_stationary_points,
    newton_refine,
)
