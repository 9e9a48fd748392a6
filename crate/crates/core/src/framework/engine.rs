//! The iteration loop, its trace, and trace export.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conditions::{
    check_cc2, check_scale, lemma2_identity_check, prediction_inequality_slack, CertRecord,
    Competitor,
};
use super::method::{PcMethod, PenaltyWindow};
use super::metrics::{gap_metrics, ErgodicAverage};
use super::state::{IterateState, Prediction};
use crate::error::{Error, Result};
use crate::linalg::{is_psd, DenseVector};
use crate::problems::SaddlePoint;
use crate::scalar::Scalar;

pub const CC1_TOL: f64 = 1e-10;
pub const CC2_TOL: f64 = 1e-10;
pub const LEMMA2_TOL: f64 = 1e-9;
pub const CC3_TOL: f64 = 1e-8;
pub const PREDICTION_TOL: f64 = 1e-8;
pub const CORRECTION_TOL: f64 = 1e-11;
pub const PSD_TOL: f64 = 1e-9;
pub const SUBPROBLEM_TOL: f64 = 1e-9;
/// Relative slack allowed on the telescoped ergodic bound.
pub const BOUND_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// First and second conditions plus correction consistency.
    Cc1,
    /// Third condition and the ergodic bound it implies.
    Cc3,
    Lemma2,
    PredictionInequality,
}

impl std::str::FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown check `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Number of iterations `K`; iterations are indexed `0..K`.
    pub iterations: usize,
    pub record_every: usize,
    pub checks: Vec<Check>,
    pub competitors: usize,
    pub seed: u64,
}

impl RunOptions {
    pub fn new(iterations: usize) -> Self {
        Self {
            iterations,
            record_every: 1,
            checks: Vec::new(),
            competitors: 50,
            seed: 0,
        }
    }

    pub fn with_checks(mut self, checks: &[Check]) -> Self {
        self.checks = checks.to_vec();
        self
    }

    pub fn all_checks(self) -> Self {
        self.with_checks(&[
            Check::Cc1,
            Check::Cc3,
            Check::Lemma2,
            Check::PredictionInequality,
        ])
    }

    fn wants(&self, c: Check) -> bool {
        self.checks.contains(&c)
    }
}

/// Check values at one recorded iteration. Ratios are `value / scale`, so
/// each is compared directly against its tolerance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckValues {
    pub cc1_ratio: Option<f64>,
    pub cc2_ratio: Option<f64>,
    pub correction_ratio: Option<f64>,
    pub lemma2_ratio: Option<f64>,
    pub cc3_ratio: Option<f64>,
    pub prediction_min_ratio: Option<f64>,
    pub g_psd: Option<bool>,
    pub bound_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub check: String,
    pub value: f64,
    pub limit: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "k={} {}: {:e} (limit {:e})",
            self.k, self.check, self.value, self.limit
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TraceRecord<T> {
    pub k: usize,
    pub beta_k: T,
    pub state_before: IterateState<T>,
    pub prediction: Prediction<T>,
    pub state_after: IterateState<T>,
    pub cert: CertRecord<T>,
    /// `‖Ax̃^k − b‖`
    pub feasibility: T,
    /// Lagrangian gap at `x̃^k`.
    pub gap_at_saddle: T,
    /// `‖x^k − x^{k+1}‖²`
    pub iterate_diff_sq: T,
    pub lagrangian_gap_ergodic: T,
    pub feasibility_ergodic: T,
    pub ergodic_weight_sum: T,
    pub subproblem_residual: T,
    pub checks: CheckValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SolverTrace<T> {
    pub method: String,
    pub records: Vec<TraceRecord<T>>,
    /// `X̃^K`
    pub ergodic_x: DenseVector<T>,
    /// `Σ r^k`
    pub ergodic_weight_sum: T,
    /// `‖v⁰ − v*‖²_{H₀⁰} + 2Θ⁰`
    pub bound_numerator: T,
    pub max_subproblem_residual: T,
    pub violations: Vec<Violation>,
}

/// One exported row; the CSV and JSON exports carry exactly these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub beta_k: f64,
    pub r_k: f64,
    pub lagrangian_gap_ergodic: f64,
    pub feasibility_ergodic: f64,
    pub gap_pointwise: f64,
    pub iterate_diff_sq: f64,
    pub cc1_residual: Option<f64>,
    pub cc3_slack: Option<f64>,
    pub theta_k: f64,
}

impl<T: Scalar> SolverTrace<T> {
    /// Weighted mean of the recorded predictions; equals `ergodic_x` when
    /// every iteration was recorded.
    pub fn recompute_ergodic(&self) -> Result<DenseVector<T>> {
        let dim = self.ergodic_x.dim();
        let mut avg = ErgodicAverage::new(dim);
        for r in &self.records {
            avg.push(&r.prediction.x_tilde(), r.cert.r_k)?;
        }
        Ok(avg.mean())
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        self.records
            .iter()
            .map(|r| TraceRow {
                k: r.k,
                beta_k: r.beta_k.to_f64_lossy(),
                r_k: r.cert.r_k.to_f64_lossy(),
                lagrangian_gap_ergodic: r.lagrangian_gap_ergodic.to_f64_lossy(),
                feasibility_ergodic: r.feasibility_ergodic.to_f64_lossy(),
                gap_pointwise: r.gap_at_saddle.to_f64_lossy(),
                iterate_diff_sq: r.iterate_diff_sq.to_f64_lossy(),
                cc1_residual: r.cert.cc1_residual.map(|v| v.to_f64_lossy()),
                cc3_slack: r.cert.cc3_slack.map(|v| v.to_f64_lossy()),
                theta_k: r.cert.theta_k.to_f64_lossy(),
            })
            .collect()
    }

    pub fn final_record(&self) -> Option<&TraceRecord<T>> {
        self.records.last()
    }
}

pub fn write_rows_csv(rows: &[TraceRow], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(rows: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows_csv(rows, std::fs::File::create(path)?)
}

pub fn write_trace_json(rows: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(rows)?)?;
    Ok(())
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

fn ratio<T: Scalar>(value: T, scale: T) -> f64 {
    (value / scale).to_f64_lossy()
}

fn random_competitor<T: Scalar, M: PcMethod<T> + ?Sized>(
    method: &M,
    prediction: &Prediction<T>,
    rng: &mut ChaCha8Rng,
) -> Result<Competitor<T>> {
    let mut perturb = |v: &DenseVector<T>| {
        DenseVector::from_vec(
            v.iter()
                .map(|&x| x + T::lit(rng.gen_range(-1.0..=1.0)))
                .collect(),
        )
    };
    let x_blocks: Vec<DenseVector<T>> =
        prediction.x_tilde_blocks.iter().map(&mut perturb).collect();
    let lambda = perturb(&prediction.lambda_tilde);
    let v = method.v_map(&x_blocks, &lambda);
    let z = method.anchor(&x_blocks)?;
    Ok(Competitor {
        x_blocks,
        lambda,
        v,
        z,
    })
}

/// Runs `method` for `opts.iterations` steps with penalties `betas[k]`
/// (which must cover `k = 0..=K`).
///
/// The run starts with one unrecorded step from `x = 0, λ = 0` at `β⁰`,
/// so that quantities referring to `β^{−1}` and `x^{−1}` are defined with
/// `β^{−1} := β⁰` at the first recorded iteration.
pub fn run_method<T: Scalar, M: PcMethod<T> + ?Sized>(
    method: &M,
    betas: &[T],
    saddle: &SaddlePoint<T>,
    opts: &RunOptions,
) -> Result<SolverTrace<T>> {
    let k_max = opts.iterations;
    if betas.len() < k_max + 1 {
        return Err(Error::Schedule(format!(
            "need {} penalties, schedule provided {}",
            k_max + 1,
            betas.len()
        )));
    }
    if opts.record_every == 0 {
        return Err(Error::Config("record_every must be >= 1".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(**b > T::zero())) {
        return Err(Error::Schedule(format!(
            "penalty must be positive, got {b}"
        )));
    }
    let problem = method.problem();
    let ref_blocks = saddle.x_blocks(problem);
    let v_ref = method.v_map(&ref_blocks, &saddle.lambda_star);

    let beta0 = betas[0];
    let warm = method.step(
        &method.zero_state(),
        PenaltyWindow::constant(beta0),
        saddle,
        false,
    )?;
    let mut state = warm.next_state;
    state.iteration = 0;

    let theta0 = method.theta(&state, beta0, beta0);
    let bound_numerator = method.h0(beta0).quad_form(&(&state.v - &v_ref)) + T::lit(2.0) * theta0;

    let mut ergodic = ErgodicAverage::new(problem.total_dim());
    let mut records = Vec::new();
    let mut violations = Vec::new();
    let mut max_sub = T::zero();
    let checking = !opts.checks.is_empty();

    for k in 0..k_max {
        let window = PenaltyWindow {
            prev: if k == 0 { beta0 } else { betas[k - 1] },
            current: betas[k],
            next: betas[k + 1],
        };
        let record = k % opts.record_every == 0 || k + 1 == k_max;
        let out = method.step(&state, window, saddle, checking && record)?;
        if !out.next_state.v.is_finite() {
            return Err(Error::NonFinite("iterate"));
        }
        max_sub = max_sub.max(out.subproblem_residual);
        let x_tilde = out.prediction.x_tilde();
        ergodic.push(&x_tilde, out.cert.r_k)?;

        if !record {
            state = out.next_state;
            continue;
        }

        let mut flag = |check: &str, value: f64, limit: f64| {
            violations.push(Violation {
                k,
                check: check.to_string(),
                value,
                limit,
            })
        };
        let mut checks = CheckValues::default();
        if checking && out.subproblem_residual.to_f64_lossy() > SUBPROBLEM_TOL {
            flag(
                "subproblem",
                out.subproblem_residual.to_f64_lossy(),
                SUBPROBLEM_TOL,
            );
        }
        if let Some(m) = &out.matrices {
            let scale = check_scale(m, &state.v, &out.prediction.v_tilde, &v_ref);
            if opts.wants(Check::Cc1) {
                let c1 = ratio(
                    out.cert.cc1_residual.unwrap_or_else(T::zero),
                    T::one() + m.q.frobenius_norm(),
                );
                let c2 = ratio(check_cc2(m), T::one() + m.g.frobenius_norm());
                let expected = m.corrected(&state.v, &out.prediction.v_tilde);
                let corr = ratio(
                    (&out.next_state.v - &expected).norm(),
                    T::one() + state.v.norm(),
                );
                checks.cc1_ratio = Some(c1);
                checks.cc2_ratio = Some(c2);
                checks.correction_ratio = Some(corr);
                if !(c1 <= CC1_TOL) {
                    flag("cc1", c1, CC1_TOL);
                }
                if !(c2 <= CC2_TOL) {
                    flag("cc2", c2, CC2_TOL);
                }
                if !(corr <= CORRECTION_TOL) {
                    flag("correction", corr, CORRECTION_TOL);
                }
                if method.claims_psd_g() {
                    let psd = is_psd(&m.g.symmetrized(), T::lit(PSD_TOL))?;
                    checks.g_psd = Some(psd);
                    if !psd {
                        flag("g-psd", 0.0, PSD_TOL);
                    }
                }
            }
            if opts.wants(Check::Lemma2) {
                let l2 = ratio(
                    lemma2_identity_check(m, &state.v, &out.prediction.v_tilde, &v_ref),
                    scale,
                );
                checks.lemma2_ratio = Some(l2);
                if !(l2 <= LEMMA2_TOL) {
                    flag("lemma2", l2, LEMMA2_TOL);
                }
            }
            if opts.wants(Check::Cc3) {
                if let Some(slack) = out.cert.cc3_slack {
                    let c3 = ratio(slack, scale);
                    checks.cc3_ratio = Some(c3);
                    if !(c3 >= -CC3_TOL) {
                        flag("cc3", c3, -CC3_TOL);
                    }
                }
            }
            if opts.wants(Check::PredictionInequality) && opts.competitors > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    opts.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                let mut worst = f64::INFINITY;
                for _ in 0..opts.competitors {
                    let u = random_competitor(method, &out.prediction, &mut rng)?;
                    let (slack, sc) = prediction_inequality_slack(
                        problem,
                        &out.prediction,
                        &m.q,
                        &state.v,
                        out.cert.sigma_used,
                        &out.cert.z_k,
                        &u,
                    )?;
                    worst = worst.min(ratio(slack, sc));
                }
                checks.prediction_min_ratio = Some(worst);
                if !(worst >= -PREDICTION_TOL) {
                    flag("prediction-inequality", worst, -PREDICTION_TOL);
                }
            }
        }

        let xbar = ergodic.mean();
        let gm_bar = gap_metrics(problem, &xbar, saddle)?;
        let gm = gap_metrics(problem, &x_tilde, saddle)?;
        let diff = (&state.x() - &out.next_state.x()).norm_sq();
        let weight_sum = ergodic.weight_sum();

        if checking && opts.wants(Check::Cc3) && method.certifies_cc3() {
            let bound = bound_numerator / (T::lit(2.0) * weight_sum);
            let b = ratio(gm_bar.lagrangian_gap, bound);
            checks.bound_ratio = Some(b);
            if gm_bar.lagrangian_gap.to_f64_lossy()
                > (1.0 + BOUND_SLACK) * bound.to_f64_lossy() + 1e-9
            {
                flag("ergodic-bound", b, 1.0 + BOUND_SLACK);
            }
            if gm_bar.lagrangian_gap.to_f64_lossy() < -1e-9 {
                flag("gap-sign", gm_bar.lagrangian_gap.to_f64_lossy(), -1e-9);
            }
        }

        records.push(TraceRecord {
            k,
            beta_k: betas[k],
            state_before: state,
            prediction: out.prediction,
            state_after: out.next_state.clone(),
            cert: out.cert,
            feasibility: gm.feasibility,
            gap_at_saddle: gm.lagrangian_gap,
            iterate_diff_sq: diff,
            lagrangian_gap_ergodic: gm_bar.lagrangian_gap,
            feasibility_ergodic: gm_bar.feasibility,
            ergodic_weight_sum: weight_sum,
            subproblem_residual: out.subproblem_residual,
            checks,
        });
        state = out.next_state;
    }

    Ok(SolverTrace {
        method: method.label().to_string(),
        records,
        ergodic_x: ergodic.mean(),
        ergodic_weight_sum: ergodic.weight_sum(),
        bound_numerator,
        max_subproblem_residual: max_sub,
        violations,
    })
}
