"""cicap: collision-inclusive capacity analysis for noisy car following.

A microscopic car-following simulator with perturbed observations feeds a
macroscopic chain — per-interval collision probability, expected clearance
downtime, and the resulting collision-inclusive capacity — plus headway/speed
optimizers, hour-long and two-lane refinements, and Monte Carlo validators.
"""

from .simcore import (
    GAP_FLOOR,
    MAX_REDRAWS,
    VehicleSpec,
    NoiseSpec,
    SimState,
    Trajectory,
    SweepCell,
    SimulationError,
    ObservedGapError,
    StringCollisionError,
    equilibrium_gap,
    step_idm,
    simulate_pair,
    simulate_string,
    variance_sweep,
    sweep_cell,
    post_warmup,
    gap_variance,
    write_trajectory_csv,
    read_trajectory_csv,
    write_sweep_csv,
    read_sweep_csv,
)
from .stats import (
    Histogram,
    GaussianFit,
    DensityEstimate,
    FormFit,
    InsufficientDataError,
    DegenerateRangeError,
    VARIANCE_FORMS,
    histogram,
    fit_gaussian,
    expected_counts,
    nrmse,
    gaussian_fit_nrmse,
    kde,
    empirical_collision_prob,
    fit_variance_forms,
    variance_form_r2,
    estimate_sigma_o,
    write_histogram_csv,
    read_histogram_csv,
)
from .ingest import (
    CarFollowRecord,
    FilterSpec,
    IngestError,
    MIN_CASE_SAMPLES,
    load_records,
    write_records_csv,
    filter_stable,
    filter_report,
    normalize_gaps,
)
from .analytics import (
    Policy,
    ClearanceModel,
    RoadConfig,
    TrafficState,
    CapacityReport,
    DegenerateStateError,
    collision_probability,
    log10_collision_probability,
    collision_rate,
    full_capacity,
    shockwave_speed,
    jam_shockwave,
    clearance_time,
    abnormal_weight,
    occupancy_from_balance,
    cic,
    cic_surface,
    write_surface_csv,
    read_surface_csv,
)
from .optimize import (
    ETA_CAP,
    BINDING_CONSTRAINT,
    BINDING_INTERIOR,
    BINDING_CAPACITY_ROOT,
    SafetyConstraint,
    DemandConstraint,
    CriticalHeadway,
    CurvePoint,
    OptimizationResult,
    eta_hat,
    eta_star,
    optimal_headway_capacity,
    maximize_capacity,
    eta_r,
    minimize_collision,
    write_curve_csv,
    read_curve_csv,
)
from .extensions import (
    UnsupportedConfigError,
    OneHourCapacity,
    OverlapCapacity,
    TwoLaneCapacity,
    ThroughputReport,
    expected_collisions_per_hour,
    cic_one_hour,
    cic_overlap,
    throughput_two_lane,
    compare_throughputs,
    write_extension_csv,
    read_extension_csv,
)
from .validate import (
    MonteCarloEstimate,
    SemiMarkovConfig,
    SemiMarkovResult,
    ForcedEvent,
    SpaceTimeEvent,
    SpaceTimeResult,
    ExtensionComparison,
    run_semi_markov,
    occupancy_closed_form,
    run_spacetime,
    two_lane_gain,
    compare_extension,
    write_events_csv,
    write_validation_json,
)

__version__ = "0.1.0"
