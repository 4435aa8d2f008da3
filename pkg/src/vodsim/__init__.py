"""Admission control simulator for a partitioned video-on-demand server."""

from .admission import (
    Admitted,
    Blocked,
    BlockReason,
    CascadeMode,
    OnReject,
    Scan,
    admit,
    release,
)
from .analytics import (
    ReservedBandwidthParams,
    cascade_admit_probability,
    ctmc_blocking,
    erlang_b,
    max_streams,
    reserved_bandwidth,
)
from .core import (
    ConfigurationError,
    ConsistencyError,
    ControlMatrix,
    PolicyVector,
    ServerState,
    TrafficClass,
    load_table1,
    new_server_state,
    select_policy_vector,
    validate_control_matrix,
)
from .engine import HoldingDistribution, Scenario, run, sweep, table2_scenario
from .metrics import MetricsReport, blocking_probability, throughput, traffic_intensity
from .reporting import PlotSeries, emit_plot_series, write_results_csv
from .traffic import (
    ClusterRateLadder,
    RateMapping,
    cluster_rates,
    generate_matrix,
    next_interarrival,
    request_rate,
)

__version__ = "0.1.0"
