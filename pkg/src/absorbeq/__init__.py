"""Multiplayer absorbing stochastic games: modeling, classification,
complementarity solving, equilibrium synthesis, certification, simulation."""

__version__ = "0.1.0"

from .game_core import (
    AbsorbingGame,
    ActionPartition,
    GameClassification,
    GameError,
    LShapedLabeling,
    classify,
    derive_action_partition,
    load_game,
    make_game,
    perturb_generic,
    save_game,
    validate,
)
from .payoff_engine import (
    AbsorptionSummary,
    MixedProfile,
    absorption_summary,
    discounted_payoff,
    rho,
    t_stage_payoff,
    undiscounted_payoff,
)
from .lcp_solver import (
    LcpProblem,
    LcpSolution,
    QMatrixVerdict,
    find_witness,
    is_q_matrix,
    solve_lcp,
    verify_solution,
)
from .equilibrium_solver import (
    DiscountedEquilibrium,
    MinMaxResult,
    SolverError,
    VanishingLimit,
    best_response_vs_correlated,
    capped_best_response,
    equilibrium_residual,
    minmax,
    punishment_profile,
    stationary_discounted_equilibrium,
    vanishing_discount_limit,
)
from .auxiliary_games import (
    BestResponseMatrix,
    HomotopyPoint,
    QlNqlResult,
    RestrictedGame,
    best_deviation_matrix,
    best_response_matrix_set,
    build_delta_game,
    build_homotopy_game,
    build_restricted_game,
    build_spotted_aux,
    build_witness_game,
    classify_ql_nql,
)
from .strategies import (
    AlmostStationaryProfile,
    MonitorSpec,
    Phase,
    PhasePlan,
    PunishmentSpec,
    SunspotStrategy,
    attach_monitoring,
    load_strategy,
    monitoring_window,
    save_strategy,
)
from .verifier import (
    CertificationReport,
    MinMaxRobustnessReport,
    SimulationSummary,
    best_deviation,
    certify_uniform,
    check_minmax_robustness,
    eval_strategy,
    monte_carlo,
    t_stage_value,
)
from .sunspot_synth import (
    SynthesisError,
    SynthesisResult,
    build_hat_profile,
    chi_mass,
    partition_absorbing_profiles,
    step2_quit_bound,
    step7_delta_bound,
    synth_general_quitting,
    synth_nql,
    synth_ql,
    synth_spotted,
)
