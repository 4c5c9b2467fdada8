"""Posterior network reconstruction from repeated noisy edge observations."""

from netrecon._core import (
    ConflictError,
    ContractError,
    DegenerateError,
    DerivedRates,
    EmConfig,
    EmIteration,
    EmResult,
    EmTrace,
    Error,
    FitReport,
    IidParams,
    LevelFit,
    LevelSelection,
    MultiLevelParams,
    MultiModalParams,
    NetworkSample,
    NumericError,
    ObservationCounts,
    ParseError,
    PerNodeParams,
    PooledBin,
    PosteriorEdges,
    SynthSpec,
    ValidationError,
    __version__,
    chi_squared_gof,
    derived_rates,
    e_step,
    expected_degree,
    generate_ground_truth,
    generate_observations,
    m_step,
    observed_histogram,
    parse_counts,
    parse_snapshots,
    predicted_histogram,
    profile_loglik,
    run_em,
    sample_networks,
    select_num_levels,
    write_counts,
)

__all__ = [
    "ConflictError",
    "ContractError",
    "DegenerateError",
    "DerivedRates",
    "EmConfig",
    "EmIteration",
    "EmResult",
    "EmTrace",
    "Error",
    "FitReport",
    "IidParams",
    "LevelFit",
    "LevelSelection",
    "MultiLevelParams",
    "MultiModalParams",
    "NetworkSample",
    "NumericError",
    "ObservationCounts",
    "ParseError",
    "PerNodeParams",
    "PooledBin",
    "PosteriorEdges",
    "SynthSpec",
    "ValidationError",
    "__version__",
    "chi_squared_gof",
    "derived_rates",
    "e_step",
    "expected_degree",
    "generate_ground_truth",
    "generate_observations",
    "m_step",
    "observed_histogram",
    "parse_counts",
    "parse_snapshots",
    "predicted_histogram",
    "profile_loglik",
    "run_em",
    "sample_networks",
    "select_num_levels",
    "write_counts",
]
