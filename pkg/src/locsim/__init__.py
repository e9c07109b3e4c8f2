"""locsim: slotted-time scheduling simulator and policy library for
credibility-aware real-time wireless flows."""

from .campaign import (
    PER_INTERVAL_COLUMNS,
    SUMMARY_COLUMNS,
    CampaignSpec,
    load_config,
    preset,
    run_campaign,
    run_id_for,
)
from .engine import (
    ChannelKey,
    InfeasibleTargetsError,
    IntervalRecord,
    Trace,
    channel_outcome,
    channel_uniform,
    run,
    step_interval,
)
from .metrics import (
    MetricsError,
    MetricsReport,
    WindowState,
    aoi_series,
    estimate_sigma_i,
    estimate_sigma_tot,
    loc_series,
    lyapunov_diag,
    normalized_work,
    rolling_loc,
    shortage,
    summarize,
)
from .model import (
    ClientParams,
    ConfigError,
    CostSpec,
    FeasibilityReport,
    ScheduleTargets,
    SystemConfig,
    WorkPmf,
    compute_targets,
    idle_time,
    parse_cost,
    predicted_loc,
    predicted_total_loc,
    validate_feasibility,
    work_pmf,
)
from .policies import (
    POLICIES,
    DeficitState,
    PolicyState,
    interval_order,
    ldf_key,
    max_deficit_key,
    mdvf_key,
    mwaoi_key,
    select_next,
    update_deficits,
)

__version__ = "0.1.0"

__all__ = [
    "CampaignSpec",
    "ChannelKey",
    "ClientParams",
    "ConfigError",
    "CostSpec",
    "DeficitState",
    "FeasibilityReport",
    "InfeasibleTargetsError",
    "IntervalRecord",
    "MetricsError",
    "MetricsReport",
    "PER_INTERVAL_COLUMNS",
    "POLICIES",
    "PolicyState",
    "SUMMARY_COLUMNS",
    "ScheduleTargets",
    "SystemConfig",
    "Trace",
    "WindowState",
    "WorkPmf",
    "aoi_series",
    "channel_outcome",
    "channel_uniform",
    "compute_targets",
    "estimate_sigma_i",
    "estimate_sigma_tot",
    "idle_time",
    "interval_order",
    "ldf_key",
    "load_config",
    "loc_series",
    "lyapunov_diag",
    "max_deficit_key",
    "mdvf_key",
    "mwaoi_key",
    "normalized_work",
    "parse_cost",
    "predicted_loc",
    "predicted_total_loc",
    "preset",
    "rolling_loc",
    "run",
    "run_campaign",
    "run_id_for",
    "select_next",
    "shortage",
    "step_interval",
    "summarize",
    "update_deficits",
    "validate_feasibility",
    "work_pmf",
]
