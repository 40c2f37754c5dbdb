"""Capon-family beamformers with beam-pattern-shaping penalties, a ULA
simulator, and a Monte Carlo SINR benchmark."""

from .arrays import (
    ArrayGeometry,
    ArrayManifold,
    CovarianceEstimate,
    ManifoldSplit,
    Scenario,
    SnapshotMatrix,
    SourceSpec,
    build_manifold,
    db_to_linear,
    difference_operator,
    linear_to_db,
    sample_covariance,
    scenario_from_dict,
    scenario_to_dict,
    snm_weighting,
    split_manifold,
    steering_vector,
    synthesize_snapshots,
)
from .beamformers import (
    BeamformerKind,
    BeamformerSpec,
    WeightVector,
    capon_closed_form,
    mixed_norm_capon,
    mspr_capon,
    solve_method,
    sparse_capon,
    tvm_capon,
    weighted_sparse_capon,
)
from .evaluation import (
    BeamPattern,
    SinrReport,
    beam_pattern,
    gamma_sweep,
    monte_carlo,
    mspr,
    optimal_sinr,
    select_gamma,
    sinr,
)
from .solver import (
    NumericalError,
    PenaltyKind,
    PenaltyTerm,
    ProblemSpec,
    SolverOptions,
    SolverResult,
    SolverStatus,
    admm_solve,
    eliminate_constraint,
    smooth_solve,
)

__version__ = "0.1.0"
