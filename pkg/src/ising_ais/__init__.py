"""Annealed importance sampling for Ising models with mixed boundary conditions."""

from .ais import AisConfig, AisPath, Schedule, log_weight_increment, run_ensemble, run_path
from .diagnostics import (
    DiagnosticsReport,
    ObservableEstimate,
    StreamingMoments,
    build_report,
    magnetization_positive,
    mean_spin_map,
    normalize_weights,
    sample_efficiency,
    total_magnetization,
    variance_curve,
    weighted_observable,
)
from .model import (
    BoundarySpec,
    IsingGraph,
    LatticeGeometry,
    boundary_to_field,
    build_disk_triangulation,
    build_square_lattice,
    energy_terms,
    graph_from_json,
    graph_to_json,
    quadrant_arcs,
    random_spins,
)
from .oracle import (
    ExactDistribution,
    SizeGuardError,
    enumerate_pE,
    enumerate_pV,
    enumerate_pVE,
    exact_ais_mean_weight,
    exact_sw_transition,
    spin_states,
    state_magnetizations,
    transfer_matrix_log_z,
)
from .sw import ClusterPartition, EdgeConfig, activate_edges, assign_clusters, connected_components, sw_step

__version__ = "0.1.0"
