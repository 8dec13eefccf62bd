"""Desk-scale WLAN downlink MU-MIMO frame-aggregation simulator coupled to an
online neural frame-size optimizer."""

from .channel import ChannelProfile, ber, mpdu_error_prob, phy_rate
from .config import ConfigError, ControllerSettings, ScenarioConfig, Seeds, build_scenario, load_config
from .controller import ControllerState, LoopParams, run_online_loop
from .harness import (
    ComparisonRow,
    GradCheckResult,
    OnlineRunResult,
    SweepResult,
    emit_reports,
    gradcheck,
    measure_scenario,
    online_loop,
    run_comparison,
    sweep_max_throughput,
)
from .mac_sim import (
    AggregationPolicy,
    ApState,
    Overheads,
    TxopReport,
    enqueue_arrivals,
    measure_throughput,
    run_txop,
)
from .neural import Mlp, Normalizer, StaleCacheError, TrainingPattern, train
from .traffic import Packet, TrafficModel, arrival_count_cv, make_generator, offered_load

__version__ = "0.1.0"
