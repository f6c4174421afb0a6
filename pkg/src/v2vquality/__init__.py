"""Multi-hop V2V link quality: closed-form model, Monte Carlo check, optimizer."""

__version__ = "0.1.0"

from .analytic import (
    LinkAssessment,
    assess_link,
    erlang_distance_cdf,
    expected_hops,
    hop_delay_us,
    hop_success_prob,
    link_margin_db,
    multihop_delay_us,
    path_connectivity,
    poisson_count_prob,
)
from .optimizer import (
    SweepGrid,
    SweepResult,
    SweepRow,
    figure_data,
    optimal_hop_distance,
    sweep,
)
from .params import (
    Config,
    ConfigError,
    RadioParams,
    ScenarioParams,
    ServiceProfile,
    ValidationError,
    load_config,
    noise_power_dbm,
    validate,
)
from .sim import (
    EnsembleStats,
    InsufficientData,
    RelayChain,
    TrialOutcome,
    VehiclePlacement,
    check_connectivity,
    run_ensemble,
    select_relays,
    simulate_delay,
    spawn_vehicles,
)
