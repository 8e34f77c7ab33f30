"""Graph-based semi-supervised learning with singular label weights.

Learns a function on a point-cloud graph from a handful of labeled
nodes by minimizing a Dirichlet energy whose edge weights blow up near
the labels, which keeps the few-label problem well posed where the
standard graph Laplacian degenerates to a constant.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    NonConvergenceError,
    PwglError,
    SolverError,
    UnlabeledComponentError,
)
from .geometry import PointCloud, SpatialIndex, dist_to_labels
from .kernels import KernelProfile, WeightProfile, flat_profile, kernel_moments
from .graph import (
    EnergyWeights,
    SparseGraph,
    attach_energy_weights,
    build_eps_graph,
    build_knn_graph,
)
from .solve import (
    NodeFunction,
    SolveReport,
    WnllParams,
    apply_laplacian,
    dirichlet_energy,
    solve_pw,
    solve_standard,
    solve_wnll,
)
from .classify import MulticlassTask, Prediction, accuracy, one_vs_rest
from .experiments import (
    ExperimentReport,
    SyntheticSpec,
    TrialSeries,
    experiment_rng,
    generate,
    run_decision_boundary,
    run_strip,
    run_two_point_box,
)
from .probes import (
    ConsistencyProbe,
    barrier_check,
    consistency_check,
    holder_probe,
    radial_oracle_check,
    wnll_degeneracy_probe,
)
from .mnist import IdxDataset, load_idx, run_mnist, subsample

__all__ = [
    "ConfigError",
    "DataError",
    "NonConvergenceError",
    "PwglError",
    "SolverError",
    "UnlabeledComponentError",
    "PointCloud",
    "SpatialIndex",
    "dist_to_labels",
    "KernelProfile",
    "WeightProfile",
    "flat_profile",
    "kernel_moments",
    "EnergyWeights",
    "SparseGraph",
    "attach_energy_weights",
    "build_eps_graph",
    "build_knn_graph",
    "NodeFunction",
    "SolveReport",
    "WnllParams",
    "apply_laplacian",
    "dirichlet_energy",
    "solve_pw",
    "solve_standard",
    "solve_wnll",
    "MulticlassTask",
    "Prediction",
    "accuracy",
    "one_vs_rest",
    "ExperimentReport",
    "SyntheticSpec",
    "TrialSeries",
    "experiment_rng",
    "generate",
    "run_decision_boundary",
    "run_strip",
    "run_two_point_box",
    "ConsistencyProbe",
    "barrier_check",
    "consistency_check",
    "holder_probe",
    "radial_oracle_check",
    "wnll_degeneracy_probe",
    "IdxDataset",
    "load_idx",
    "run_mnist",
    "subsample",
    "__version__",
]
