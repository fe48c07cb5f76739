"""Guaranteed detection of intermittent faults with moving-average Hotelling T^2 charts."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DimensionMismatch,
    DomainError,
    IFDetectError,
    InconsistentAlarms,
    IntegrationDiverged,
    NotDetectableWithW,
    NotPFDetectable,
    OverlappingEpisodes,
    SingularCovariance,
    TooFewSamples,
    WindowExceedsPrevQuiet,
)
from .stat_core import (  # noqa: E402
    ChartConfig,
    GaussianModel,
    control_limit,
    f_quantile,
    fit_model,
    hotelling_t2,
)
from .monitor import AlarmSequence, MovingChart, extract_alarms, t2_series  # noqa: E402
from .detectability import (  # noqa: E402
    AlarmDelays,
    DetectabilityReport,
    IFParams,
    admissible_windows,
    alarm_delays,
    detectability_report,
    if_detectable,
    optimal_window_sharp,
    optimal_window_star,
    pf_detectable,
)
from .bank import (  # noqa: E402
    BankReport,
    BankState,
    EpisodeInference,
    audit_excursions,
    compensate_missing,
    exclude_false,
    infer_times,
    intersect_inferences,
    min_alarm_durations,
    run,
)
from .simkit import (  # noqa: E402
    CstrConfig,
    FaultSchedule,
    cstr_simulate,
    gen_gaussian_stream,
    inject_faults,
)
