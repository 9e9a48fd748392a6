//! Experiment runner and empirical rate analysis.

mod experiment;
mod rates;

pub use experiment::{
    derive_schedule, prepare, run_experiment, ExperimentSpec, MethodSpec, Prepared, ProblemSource,
};
pub use rates::{
    compare_schedules, fit_power_law, fit_rate, fit_rate_with_floor, metric_series,
    ComparisonEntry, ComparisonReport, RateFit, RateMetric, Window, ACCELERATION_MARGIN,
    DEFAULT_FLOOR, MIN_POINTS, RAW_FLOOR,
};
