"""Joint offloading, power control and WPT time allocation for wireless-powered
mobile edge computing with DS-CDMA uplink offloading."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Allocation,
    Device,
    ModeVector,
    PowerCapRule,
    SolveReport,
    SystemParams,
    build_instance,
    dbm_to_watts,
    fig3_distances,
)
from .fp_power import FpOptions, fp_power_control  # noqa: E402
from .time_alloc import evaluate_modes, golden_section_maximize  # noqa: E402
from .mode_search import (  # noqa: E402
    BenchmarkKind,
    SlsOptions,
    benchmark_scheme,
    exhaustive_optimal,
    stochastic_local_search,
)

__all__ = [
    "Allocation", "Device", "ModeVector", "PowerCapRule", "SolveReport", "SystemParams",
    "build_instance", "dbm_to_watts", "fig3_distances", "FpOptions", "fp_power_control",
    "evaluate_modes", "golden_section_maximize", "BenchmarkKind", "SlsOptions",
    "benchmark_scheme", "exhaustive_optimal", "stochastic_local_search",
]
