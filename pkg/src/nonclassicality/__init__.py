"""Numerical toolkit for detecting non-classicality of an inaccessible
mediator through the entanglement it lets two probes gain.

Discrete-variable machinery (states, channels, entanglement and discord
measures, the detection pipeline) works in bits; the Gaussian
optomechanics module works in nats. See the README for the map.
"""

from .core import (
    DensityMatrix,
    MeasurementBasis,
    SystemDims,
    dephase,
    embed_local,
    haar_vector,
    hermitian_exp,
    kron,
    partial_trace,
    partial_transpose,
    relative_entropy,
    trace_distance,
    von_neumann_entropy,
    wishart_state,
)
from .dynamics import (
    LindbladModel,
    Trajectory,
    evolve_closed,
    evolve_lindblad,
    trotter_evolve,
)
from .gaussian import (
    CovarianceState,
    DriftDiffusion,
    EntanglementSeries,
    GaussianTrajectory,
    OptomechDerived,
    OptomechParams,
    SweepTable,
    TransientBenchmark,
    UnstableDriftError,
    build_drift_diffusion,
    derive_params,
    initial_covariance,
    load_params,
    log_negativity_gaussian,
    lyapunov_steady,
    propagate_covariance,
    reproduce_fig4,
    save_params,
    sweep_steady_state,
    symplectic_eigenvalues,
)
from .measures import (
    Bipartition,
    DiscordConfig,
    PurityReport,
    ReeConfig,
    ReeResult,
    RelocationReport,
    check_relocation_bound,
    discord_deficit,
    log_negativity,
    purity_criterion,
    ree,
    ree_bell_diagonal,
)
from .protocol import (
    DetectionReport,
    TheoremSuiteReport,
    TripartiteScenario,
    load_scenario,
    run_detection,
    save_scenario,
    scenario_counterexample,
    scenario_gain_example,
    sec_detection,
    theorem_property_suite,
)

__version__ = "0.1.0"

__all__ = [
    "Bipartition",
    "CovarianceState",
    "DensityMatrix",
    "DetectionReport",
    "DiscordConfig",
    "DriftDiffusion",
    "EntanglementSeries",
    "GaussianTrajectory",
    "LindbladModel",
    "MeasurementBasis",
    "OptomechDerived",
    "OptomechParams",
    "PurityReport",
    "ReeConfig",
    "ReeResult",
    "RelocationReport",
    "SweepTable",
    "SystemDims",
    "TheoremSuiteReport",
    "Trajectory",
    "TransientBenchmark",
    "TripartiteScenario",
    "UnstableDriftError",
    "build_drift_diffusion",
    "check_relocation_bound",
    "dephase",
    "derive_params",
    "discord_deficit",
    "embed_local",
    "evolve_closed",
    "evolve_lindblad",
    "haar_vector",
    "hermitian_exp",
    "initial_covariance",
    "kron",
    "load_params",
    "load_scenario",
    "log_negativity",
    "log_negativity_gaussian",
    "lyapunov_steady",
    "partial_trace",
    "partial_transpose",
    "propagate_covariance",
    "purity_criterion",
    "ree",
    "ree_bell_diagonal",
    "relative_entropy",
    "reproduce_fig4",
    "run_detection",
    "save_params",
    "save_scenario",
    "scenario_counterexample",
    "scenario_gain_example",
    "sec_detection",
    "sweep_steady_state",
    "symplectic_eigenvalues",
    "theorem_property_suite",
    "trace_distance",
    "trotter_evolve",
    "von_neumann_entropy",
    "wishart_state",
]
