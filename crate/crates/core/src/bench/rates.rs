use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::{run_experiment, ExperimentSpec};
use crate::error::{Error, Result};
use crate::framework::TraceRow;
use crate::schedules::ScheduleKind;

/// Values at or below this are treated as numerical zero.
pub const RAW_FLOOR: f64 = 1e-14;
/// Default truncation floor: the window ends where the metric first drops
/// to solver accuracy.
pub const DEFAULT_FLOOR: f64 = 1e-10;
pub const MIN_POINTS: usize = 5;
/// Slope margin by which accelerated schedules must beat the baseline.
pub const ACCELERATION_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMetric {
    ErgodicGap,
    ErgodicFeasibility,
    /// Running minimum of `‖x^i − x^{i+1}‖²`.
    MinIterateDiff,
}

impl RateMetric {
    pub fn name(self) -> &'static str {
        match self {
            RateMetric::ErgodicGap => "ergodic-gap",
            RateMetric::ErgodicFeasibility => "ergodic-feasibility",
            RateMetric::MinIterateDiff => "min-iterate-diff",
        }
    }
}

impl fmt::Display for RateMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RateMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ergodic-gap" => Ok(RateMetric::ErgodicGap),
            "ergodic-feasibility" => Ok(RateMetric::ErgodicFeasibility),
            "min-iterate-diff" => Ok(RateMetric::MinIterateDiff),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

/// Inclusive range of iteration counts `K = k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
}

impl Window {
    pub fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi }
    }

    /// `[K/40, K]`
    pub fn default_for(k: usize) -> Self {
        Self {
            lo: (k / 40).max(1),
            hi: k,
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("window '{s}' is not of the form lo:hi"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let lo: usize = a.trim().parse().map_err(|_| bad())?;
        let hi: usize = b.trim().parse().map_err(|_| bad())?;
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        Ok(Self { lo, hi })
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Least-squares line through `(log₁₀ K, log₁₀ metric)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub window: Window,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `y = C t^slope` to positive points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, y)| *t > 0.0 && *y > RAW_FLOOR && t.is_finite() && y.is_finite())
        .map(|&(t, y)| (t.log10(), y.log10()))
        .collect();
    let n = usable.len();
    if n < 2 {
        return Err(Error::InsufficientData { usable: n });
    }
    let nf = n as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { usable: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = usable
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let t_lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    Ok(RateFit {
        window: Window::new(t_lo.max(0.0) as usize, t_hi as usize),
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

/// The metric series `(K, value)` of a trace, with `K = k + 1`.
pub fn metric_series(rows: &[TraceRow], metric: RateMetric) -> Vec<(usize, f64)> {
    let mut running = f64::INFINITY;
    rows.iter()
        .map(|r| {
            let v = match metric {
                RateMetric::ErgodicGap => r.lagrangian_gap_ergodic,
                RateMetric::ErgodicFeasibility => r.feasibility_ergodic,
                RateMetric::MinIterateDiff => {
                    running = running.min(r.iterate_diff_sq);
                    running
                }
            };
            (r.k + 1, v)
        })
        .collect()
}

/// Fits the empirical order of `metric` over `window`.
///
/// The window is cut at the first record whose value is at or below
/// `floor` (clamped to at least [`RAW_FLOOR`]); at least [`MIN_POINTS`]
/// records must remain.
pub fn fit_rate_with_floor(
    rows: &[TraceRow],
    metric: RateMetric,
    window: Window,
    floor: f64,
) -> Result<RateFit> {
    let floor = floor.max(RAW_FLOOR);
    let mut pts = Vec::new();
    for (t, v) in metric_series(rows, metric) {
        if t < window.lo || t > window.hi {
            continue;
        }
        if !(v > floor) {
            break;
        }
        pts.push((t as f64, v));
    }
    if pts.len() < MIN_POINTS {
        return Err(Error::InsufficientData { usable: pts.len() });
    }
    let mut fit = fit_power_law(&pts)?;
    fit.window = window;
    Ok(fit)
}

pub fn fit_rate(rows: &[TraceRow], metric: RateMetric, window: Window) -> Result<RateFit> {
    fit_rate_with_floor(rows, metric, window, DEFAULT_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub label: String,
    pub schedule: String,
    pub fit: RateFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub metric: RateMetric,
    pub entries: Vec<ComparisonEntry>,
    /// Index of the reference entry: the first constant schedule, else the
    /// first entry.
    pub baseline: usize,
    /// Baseline slope minus the steepest other slope.
    pub margin: f64,
    pub accelerated_beats_constant: bool,
    /// Whether slopes are nonincreasing in the order constant, linear,
    /// maximal.
    pub monotone_by_kind: bool,
}

fn kind_rank(kind: &ScheduleKind<f64>) -> usize {
    match kind {
        ScheduleKind::Constant { .. } => 0,
        ScheduleKind::Linear { .. } => 1,
        ScheduleKind::Maximal { .. } => 2,
    }
}

fn kind_label(kind: &ScheduleKind<f64>) -> String {
    match kind {
        ScheduleKind::Constant { beta } => format!("constant({beta})"),
        ScheduleKind::Linear { delta, offset } => format!("linear({delta}, {offset})"),
        ScheduleKind::Maximal { condition, .. } => format!("maximal-{condition}"),
    }
}

/// Runs the specs in parallel and compares their fitted orders.
pub fn compare_schedules(
    specs: &[ExperimentSpec],
    metric: RateMetric,
    window: Option<Window>,
) -> Result<ComparisonReport> {
    if specs.len() < 2 {
        return Err(Error::Config(
            "compare needs at least two experiments".into(),
        ));
    }
    let first = &specs[0];
    if specs.iter().any(|s| s.problem != first.problem) {
        return Err(Error::Config(
            "compared experiments must share one problem".into(),
        ));
    }
    let fits: Vec<Result<RateFit>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| {
                scope.spawn(move || {
                    let trace = run_experiment(spec)?;
                    let w = window.unwrap_or_else(|| Window::default_for(spec.iterations));
                    fit_rate(&trace.rows(), metric, w)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Config("worker panicked".into())))
            })
            .collect()
    });
    let mut entries = Vec::with_capacity(specs.len());
    for (i, (spec, fit)) in specs.iter().zip(fits).enumerate() {
        entries.push(ComparisonEntry {
            label: format!("#{i} {}", spec.method.config.method.name()),
            schedule: kind_label(&spec.schedule.kind),
            fit: fit?,
        });
    }
    let baseline = specs
        .iter()
        .position(|s| matches!(s.schedule.kind, ScheduleKind::Constant { .. }))
        .unwrap_or(0);
    let steepest = entries
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != baseline)
        .map(|(_, e)| e.fit.slope)
        .fold(f64::INFINITY, f64::min);
    let margin = entries[baseline].fit.slope - steepest;
    let mut order: Vec<(usize, f64)> = specs
        .iter()
        .zip(&entries)
        .map(|(s, e)| (kind_rank(&s.schedule.kind), e.fit.slope))
        .collect();
    order.sort_by_key(|e| e.0);
    let monotone_by_kind = order
        .windows(2)
        .all(|p| p[0].0 == p[1].0 || p[1].1 <= p[0].1);
    Ok(ComparisonReport {
        metric,
        entries,
        baseline,
        margin,
        accelerated_beats_constant: margin >= ACCELERATION_MARGIN,
        monotone_by_kind,
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<6} {:<24} {:>10} {:>8} {:>7}",
            "run", "schedule", "slope", "r2", "points"
        )?;
        for (i, e) in self.entries.iter().enumerate() {
            let mark = if i == self.baseline { "*" } else { "" };
            writeln!(
                f,
                "{:<6} {:<24} {:>10.4} {:>8.4} {:>7}",
                format!("{}{mark}", e.label),
                e.schedule,
                e.fit.slope,
                e.fit.r_squared,
                e.fit.points
            )?;
        }
        writeln!(f, "margin vs baseline: {:.4}", self.margin)?;
        writeln!(
            f,
            "accelerated beats baseline by >= {ACCELERATION_MARGIN}: {}",
            self.accelerated_beats_constant
        )?;
        write!(
            f,
            "slopes monotone by schedule kind: {}",
            self.monotone_by_kind
        )
    }
}
