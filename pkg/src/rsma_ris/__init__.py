"""Latency vs. energy-efficiency optimization of a RIS-aided RSMA MIMO
downlink under short-packet (finite-blocklength) coding."""

from .model import (
    BeamformerSet,
    ChannelDrop,
    DesignPoint,
    FeasibilityReport,
    ModelError,
    RisPhase,
    ScenarioConfig,
    effective_channel,
    effective_channels_all,
    validate_design,
)
from .metrics import (
    MetricsReport,
    common_rate_fbl,
    inverse_q,
    metrics_report,
    power_consumption,
    private_rate_fbl,
    reliability_split,
)
from .surrogates import (
    DegenerateExpansionError,
    SurrogateCoefficients,
    beam_surrogate_coefficients,
    eval_beam_surrogate,
    eval_ris_surrogate,
    ris_surrogate_coefficients,
)
from .conic import (
    ConicProgram,
    SubproblemSolution,
    build_beam_subproblem,
    build_ris_subproblem,
    solve_conic,
)
from .optimizer import AoOptions, SolveTrace, VariantSpec, ao_solve, initialize, quadratic_transform_weights
from .channels import TopologyConfig, generate_drop
from .oracle import OracleResult, grid_oracle
from .harness import (
    ExperimentPlan,
    ParetoPoint,
    ResultRow,
    export_results,
    load_plan,
    load_results,
    pareto_filter,
    pareto_region,
    run_plan,
)

__version__ = "0.1.0"
