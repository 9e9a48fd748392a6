//! Penalty sequences `β^k`, their ergodic weights `r^k`, and validators for
//! the growth conditions that certify accelerated rates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

/// Growth condition a maximal schedule is built from.
///
/// * `V25`, `A16`: `β^k(τrβ^k + σ) ≥ τr(β^{k+1})²`, `β^{k+1} ≥ β^k`
/// * `C14`: `β^k(β^k + σ') ≥ (β^{k+1})²`, `(β^k)³/(β^k + σ') ≤ (β^{k−1})²`,
///   `β^{k+1} ≥ β^k`, with `σ' = σ/σ_max(A₂ᵀA₂)`
/// * `D10`: `1/(β^k)² + s/β^k ≥ 1/(β^{k+1})² + (1−γ)s/β^{k+1}`,
///   with `s = σ_min(A_mA_mᵀ)/L`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    V25,
    C14,
    A16,
    D10,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::V25 => "v25",
            Condition::C14 => "c14",
            Condition::A16 => "a16",
            Condition::D10 => "d10",
        }
    }

    /// Weight rule the condition is paired with.
    pub fn weight_rule(self) -> WeightRule {
        match self {
            Condition::D10 => WeightRule::InverseBeta,
            _ => WeightRule::Beta,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v25" => Ok(Condition::V25),
            "c14" => Ok(Condition::C14),
            "a16" => Ok(Condition::A16),
            "d10" => Ok(Condition::D10),
            other => Err(Error::Config(format!("unknown condition '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRule {
    /// `r^k = β^k`
    #[default]
    Beta,
    /// `r^k = 1/β^k`
    InverseBeta,
}

impl WeightRule {
    pub fn apply<T: Scalar>(self, beta: T) -> T {
        match self {
            WeightRule::Beta => beta,
            WeightRule::InverseBeta => T::one() / beta,
        }
    }
}

/// Constants entering the growth conditions. Only the ones a condition
/// reads need to be present.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScheduleParams<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_prox: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<T>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        rename = "sigma_max_A2"
    )]
    pub sigma_max_a2: Option<T>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        rename = "sigma_min_AmAmT"
    )]
    pub sigma_min_am: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "L")]
    pub lipschitz: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<T>,
}

fn need<T: Scalar>(v: Option<T>, name: &str, cond: Condition) -> Result<T> {
    let v = v.ok_or_else(|| Error::Schedule(format!("condition {cond} needs parameter {name}")))?;
    if !(v.is_finite()) {
        return Err(Error::Schedule(format!(
            "parameter {name} = {v} is not finite"
        )));
    }
    Ok(v)
}

fn need_positive<T: Scalar>(v: Option<T>, name: &str, cond: Condition) -> Result<T> {
    let v = need(v, name, cond)?;
    if !(v > T::zero()) {
        return Err(Error::Schedule(format!(
            "parameter {name} = {v} must be positive"
        )));
    }
    Ok(v)
}

/// Condition constants after validation.
#[derive(Debug, Clone, Copy)]
enum Resolved<T> {
    /// `β^{k+1}² ≤ β^k(β^k + c)` with `c = σ/(τr)`
    Proximal { tau_r: T, sigma: T },
    /// `σ' = σ/σ_max(A₂ᵀA₂)`
    Admm { sigma_prime: T },
    /// `s = σ_min/L`
    Multiblock { s: T, gamma: T },
}

impl<T: Scalar> ScheduleParams<T> {
    fn resolve(&self, cond: Condition) -> Result<Resolved<T>> {
        match cond {
            Condition::V25 | Condition::A16 => {
                let tau = need_positive(self.tau, "tau", cond)?;
                let r = need_positive(self.r_prox, "r_prox", cond)?;
                let sigma = need(self.sigma, "sigma", cond)?;
                if sigma < T::zero() {
                    return Err(Error::Schedule(format!(
                        "sigma = {sigma} must be nonnegative"
                    )));
                }
                Ok(Resolved::Proximal {
                    tau_r: tau * r,
                    sigma,
                })
            }
            Condition::C14 => {
                let sigma = need(self.sigma, "sigma", cond)?;
                if sigma < T::zero() {
                    return Err(Error::Schedule(format!(
                        "sigma = {sigma} must be nonnegative"
                    )));
                }
                let smax = need_positive(self.sigma_max_a2, "sigma_max_A2", cond)?;
                Ok(Resolved::Admm {
                    sigma_prime: sigma / smax,
                })
            }
            Condition::D10 => {
                let smin = need(self.sigma_min_am, "sigma_min_AmAmT", cond)?;
                if smin < T::zero() {
                    return Err(Error::Schedule(format!(
                        "sigma_min_AmAmT = {smin} must be nonnegative"
                    )));
                }
                let l = need_positive(self.lipschitz, "L", cond)?;
                let gamma = need_positive(self.gamma, "gamma", cond)?;
                if gamma > T::one() {
                    return Err(Error::Schedule(format!(
                        "d10 needs gamma <= 1, got {gamma}"
                    )));
                }
                Ok(Resolved::Multiblock { s: smin / l, gamma })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Scalar")]
pub enum ScheduleKind<T> {
    Constant {
        beta: T,
    },
    /// `β^k = δ(k + offset)`
    Linear {
        delta: T,
        #[serde(default = "one")]
        offset: T,
    },
    /// Equality in the named growth condition. Without `beta0` the
    /// sequence starts on its asymptote, see [`PenaltySchedule::start`].
    #[serde(alias = "maximal-recurrence")]
    Maximal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta0: Option<T>,
        condition: Condition,
        #[serde(default)]
        params: ScheduleParams<T>,
    },
}

fn one<T: Scalar>() -> T {
    T::one()
}

/// A penalty sequence together with the rule mapping `β^k` to `r^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PenaltySchedule<T> {
    #[serde(flatten)]
    pub kind: ScheduleKind<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_rule: Option<WeightRule>,
}

/// Relative slack of the schedule validator.
pub const SCHEDULE_SLACK: f64 = 1e-12;

impl<T: Scalar> PenaltySchedule<T> {
    pub fn constant(beta: T) -> Self {
        Self {
            kind: ScheduleKind::Constant { beta },
            weight_rule: None,
        }
    }

    pub fn linear(delta: T, offset: T) -> Self {
        Self {
            kind: ScheduleKind::Linear { delta, offset },
            weight_rule: None,
        }
    }

    pub fn maximal(beta0: T, condition: Condition, params: ScheduleParams<T>) -> Self {
        Self {
            kind: ScheduleKind::Maximal {
                beta0: Some(beta0),
                condition,
                params,
            },
            weight_rule: None,
        }
    }

    /// Maximal schedule whose first penalty is chosen by [`Self::start`].
    pub fn maximal_auto(condition: Condition, params: ScheduleParams<T>) -> Self {
        Self {
            kind: ScheduleKind::Maximal {
                beta0: None,
                condition,
                params,
            },
            weight_rule: None,
        }
    }

    pub fn with_weight_rule(mut self, rule: WeightRule) -> Self {
        self.weight_rule = Some(rule);
        self
    }

    /// Explicit rule, else the one paired with the condition, else `r = β`.
    pub fn weight_rule(&self) -> WeightRule {
        match (&self.weight_rule, &self.kind) {
            (Some(r), _) => *r,
            (None, ScheduleKind::Maximal { condition, .. }) => condition.weight_rule(),
            (None, _) => WeightRule::Beta,
        }
    }

    /// The condition a maximal schedule is built from.
    pub fn condition(&self) -> Option<Condition> {
        match &self.kind {
            ScheduleKind::Maximal { condition, .. } => Some(*condition),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Schedule(format!(
                    "{name} = {v} must be positive and finite"
                )))
            }
        };
        match &self.kind {
            ScheduleKind::Constant { beta } => pos(*beta, "beta"),
            ScheduleKind::Linear { delta, offset } => {
                pos(*delta, "delta")?;
                pos(*offset, "offset")
            }
            ScheduleKind::Maximal {
                beta0,
                condition,
                params,
            } => {
                if let Some(b) = beta0 {
                    pos(*b, "beta0")?;
                }
                params.resolve(*condition).map(|_| ())
            }
        }
    }

    /// `β^0, …, β^{len−1}`.
    pub fn betas(&self, len: usize) -> Result<Vec<T>> {
        self.validate()?;
        let out: Vec<T> = match &self.kind {
            ScheduleKind::Constant { beta } => vec![*beta; len],
            ScheduleKind::Linear { delta, offset } => (0..len)
                .map(|k| *delta * (lit_usize::<T>(k) + *offset))
                .collect(),
            ScheduleKind::Maximal {
                beta0,
                condition,
                params,
            } => {
                let rule = params.resolve(*condition)?;
                let mut v = Vec::with_capacity(len);
                let mut b = beta0.unwrap_or_else(|| asymptotic_start(rule));
                for _ in 0..len {
                    v.push(b);
                    b = next_maximal(rule, b);
                }
                v
            }
        };
        if let Some((k, b)) = out
            .iter()
            .enumerate()
            .find(|(_, b)| !(**b > T::zero() && b.is_finite()))
        {
            return Err(Error::Schedule(format!(
                "beta_{k} = {b} is not positive and finite"
            )));
        }
        Ok(out)
    }

    /// First penalty `β^0`. A maximal schedule without an explicit `beta0`
    /// starts where its growth is already linear: `β^0` equals the
    /// asymptotic increment of `r^k` per step (`σ/(2τr)` for v25/a16,
    /// `σ'/2` for c14, and `1/β^0 = γs/2` for d10), or 1 when that
    /// increment vanishes.
    pub fn start(&self) -> Result<T> {
        Ok(self.betas(1)?[0])
    }

    pub fn beta_at(&self, k: usize) -> Result<T> {
        Ok(self.betas(k + 1)?[k])
    }

    /// `r^0, …, r^K` with compensated partial sums.
    pub fn weights(&self, k_max: usize) -> Result<Weights<T>> {
        let rule = self.weight_rule();
        let r: Vec<T> = self
            .betas(k_max + 1)?
            .into_iter()
            .map(|b| rule.apply(b))
            .collect();
        let mut acc = CompensatedSum::new();
        let partial_sums = r
            .iter()
            .map(|&w| {
                acc.add(w);
                acc.value()
            })
            .collect();
        Ok(Weights { r, partial_sums })
    }
}

fn lit_usize<T: Scalar>(k: usize) -> T {
    T::from_usize(k).expect("index representable")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights<T> {
    pub r: Vec<T>,
    pub partial_sums: Vec<T>,
}

impl<T: Scalar> Weights<T> {
    pub fn total(&self) -> T {
        self.partial_sums.last().copied().unwrap_or_else(T::zero)
    }
}

fn asymptotic_start<T: Scalar>(rule: Resolved<T>) -> T {
    let half = T::lit(0.5);
    let b = match rule {
        Resolved::Proximal { tau_r, sigma } => half * sigma / tau_r,
        Resolved::Admm { sigma_prime } => half * sigma_prime,
        Resolved::Multiblock { s, gamma } => T::one() / (half * gamma * s),
    };
    if b > T::zero() && b.is_finite() {
        b
    } else {
        T::one()
    }
}

fn next_maximal<T: Scalar>(rule: Resolved<T>, a: T) -> T {
    match rule {
        Resolved::Proximal { tau_r, sigma } => (a * (tau_r * a + sigma) / tau_r).sqrt(),
        Resolved::Admm { sigma_prime } => c14_next(a, sigma_prime),
        Resolved::Multiblock { s, gamma } => {
            // w = 1/β^{k+1} solves w² + (1−γ)s w − (1/a² + s/a) = 0
            let c = T::one() / (a * a) + s / a;
            let p = (T::one() - gamma) * s;
            let w = (-p + (p * p + T::lit(4.0) * c).sqrt()) / T::lit(2.0);
            T::one() / w
        }
    }
}

/// Largest `b` with `b³/(b + σ') ≤ a²` (the second clause at the next
/// index, which is tighter than `b² ≤ a(a + σ')`): the root of
/// `b³ − a²b − a²σ' = 0` on `[a, √(a² + aσ')]`.
fn c14_next<T: Scalar>(a: T, sp: T) -> T {
    if sp == T::zero() {
        return a;
    }
    let f = |b: T| b * b * b - a * a * b - a * a * sp;
    let mut lo = a;
    let mut hi = (a * a + a * sp).sqrt();
    for _ in 0..200 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One failed clause of a growth condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleViolation {
    pub k: usize,
    pub clause: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} {}: {:e} < {:e}",
            self.k, self.clause, self.lhs, self.rhs
        )
    }
}

/// Evaluates every clause of `condition` for `k = 0..horizon−1` on the
/// schedule's sequence and reports the clauses that fail by more than
/// [`SCHEDULE_SLACK`] relative.
///
/// The second `c14` clause references `β^{k−1}` and is checked from
/// `k = 1`.
pub fn validate_schedule<T: Scalar>(
    schedule: &PenaltySchedule<T>,
    condition: Condition,
    params: &ScheduleParams<T>,
    horizon: usize,
) -> Result<Vec<ScheduleViolation>> {
    let betas = schedule.betas(horizon + 1)?;
    validate_sequence(&betas, condition, params)
}

/// [`validate_schedule`] on an explicit sequence `β^0, …, β^K`.
pub fn validate_sequence<T: Scalar>(
    betas: &[T],
    condition: Condition,
    params: &ScheduleParams<T>,
) -> Result<Vec<ScheduleViolation>> {
    let rule = params.resolve(condition)?;
    let mut out = Vec::new();
    let slack = T::lit(SCHEDULE_SLACK);
    let mut ge = |k: usize, clause: &'static str, lhs: T, rhs: T| {
        if lhs < rhs - slack * lhs.abs().max(rhs.abs()) || !lhs.is_finite() || !rhs.is_finite() {
            out.push(ScheduleViolation {
                k,
                clause,
                lhs: lhs.to_f64_lossy(),
                rhs: rhs.to_f64_lossy(),
            });
        }
    };
    for k in 0..betas.len().saturating_sub(1) {
        let (b, bn) = (betas[k], betas[k + 1]);
        match rule {
            Resolved::Proximal { tau_r, sigma } => {
                ge(k, "growth", b * (tau_r * b + sigma), tau_r * bn * bn);
                ge(k, "monotone", bn, b);
            }
            Resolved::Admm { sigma_prime } => {
                ge(k, "growth", b * (b + sigma_prime), bn * bn);
                if k >= 1 {
                    let bp = betas[k - 1];
                    ge(k, "lag", bp * bp, b * b * b / (b + sigma_prime));
                }
                ge(k, "monotone", bn, b);
            }
            Resolved::Multiblock { s, gamma } => {
                let one = T::one();
                ge(
                    k,
                    "growth",
                    one / (b * b) + s / b,
                    one / (bn * bn) + (one - gamma) * s / bn,
                );
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v25(tau: f64, r: f64, sigma: f64) -> ScheduleParams<f64> {
        ScheduleParams {
            tau: Some(tau),
            r_prox: Some(r),
            sigma: Some(sigma),
            ..Default::default()
        }
    }

    fn d10(s: f64, gamma: f64) -> ScheduleParams<f64> {
        ScheduleParams {
            sigma_min_am: Some(s),
            lipschitz: Some(1.0),
            gamma: Some(gamma),
            ..Default::default()
        }
    }

    fn c14(sigma: f64, smax: f64) -> ScheduleParams<f64> {
        ScheduleParams {
            sigma: Some(sigma),
            sigma_max_a2: Some(smax),
            ..Default::default()
        }
    }

    #[test]
    fn maximal_v25_first_step() {
        let s = PenaltySchedule::maximal(1.0, Condition::V25, v25(1.0, 1.0, 1.0));
        assert!((s.beta_at(1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let w = s.weights(1).unwrap();
        assert_eq!(w.r[0], 1.0);
        assert!((w.r[1] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn maximal_d10_first_step() {
        let s = PenaltySchedule::maximal(1.0, Condition::D10, d10(1.0, 1.0));
        let b1 = s.beta_at(1).unwrap();
        assert!((1.0 / (b1 * b1) - 2.0).abs() < 1e-14);
        assert!((b1 - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.weight_rule(), WeightRule::InverseBeta);
    }

    #[test]
    fn simple_weights() {
        let w = PenaltySchedule::constant(2.0).weights(2).unwrap();
        assert_eq!(w.r, vec![2.0, 2.0, 2.0]);
        assert_eq!(w.total(), 6.0);
        let w = PenaltySchedule::linear(1.0, 1.0).weights(2).unwrap();
        assert_eq!(w.r, vec![1.0, 2.0, 3.0]);
        assert_eq!(w.partial_sums, vec![1.0, 3.0, 6.0]);
    }

    #[test]
    fn nonpositive_parameters_rejected() {
        assert!(matches!(
            PenaltySchedule::constant(0.0).betas(3),
            Err(Error::Schedule(_))
        ));
        assert!(matches!(
            PenaltySchedule::linear(-1.0, 1.0).betas(3),
            Err(Error::Schedule(_))
        ));
        let s = PenaltySchedule::maximal(-1.0, Condition::V25, v25(1.0, 1.0, 1.0));
        assert!(matches!(s.betas(3), Err(Error::Schedule(_))));
        let s = PenaltySchedule::maximal(1.0, Condition::C14, ScheduleParams::default());
        assert!(matches!(s.betas(3), Err(Error::Schedule(_))));
    }

    #[test]
    fn maximal_schedules_satisfy_their_conditions() {
        let cases = [
            (Condition::V25, v25(0.9, 3.7, 1.0)),
            (Condition::A16, v25(0.75, 2.1, 1.0)),
            (Condition::C14, c14(1.0, 4.3)),
            (Condition::D10, d10(0.2, 1.0)),
            (Condition::D10, d10(0.2, 0.5)),
        ];
        for (cond, params) in cases {
            let s = PenaltySchedule::maximal(1.0, cond, params);
            let bad = validate_schedule(&s, cond, &params, 10_000).unwrap();
            assert!(bad.is_empty(), "{cond}: {:?}", &bad[..bad.len().min(3)]);
        }
    }

    #[test]
    fn c14_recurrence_saturates_the_lag_clause() {
        let p = c14(1.0, 2.0);
        let b = PenaltySchedule::maximal(0.5, Condition::C14, p)
            .betas(50)
            .unwrap();
        for k in 1..49 {
            let lhs = b[k] * b[k] * b[k] / (b[k] + 0.5);
            assert!((lhs - b[k - 1] * b[k - 1]).abs() <= 1e-13 * lhs);
        }
        // equality in the first clause alone violates the lag clause
        let sp = 0.5;
        let mut naive = vec![1.0f64];
        for k in 0..10 {
            let a = naive[k];
            naive.push((a * (a + sp)).sqrt());
        }
        let bad = validate_sequence(&naive, Condition::C14, &p).unwrap();
        assert!(bad.iter().any(|v| v.clause == "lag"));
    }

    #[test]
    fn linear_and_constant_against_v25() {
        let (tau, r, sigma) = (0.9, 2.5, 1.0);
        let delta = sigma / (3.0 * tau * r);
        let s = PenaltySchedule::linear(delta, 1.0);
        assert!(
            validate_schedule(&s, Condition::V25, &v25(tau, r, sigma), 10_000)
                .unwrap()
                .is_empty()
        );
        let s = PenaltySchedule::constant(3.0);
        assert!(
            validate_schedule(&s, Condition::V25, &v25(tau, r, sigma), 100)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn maximal_growth_is_linear() {
        let (tau, r, sigma) = (0.9, 2.5, 1.0);
        let s = PenaltySchedule::maximal(1.0, Condition::V25, v25(tau, r, sigma));
        let k = 1000;
        let ratio = s.weights(k).unwrap().r[k] / k as f64;
        let slope = sigma / (2.0 * tau * r);
        assert!((ratio / slope - 1.0).abs() < 0.25, "{ratio} vs {slope}");
        let s = PenaltySchedule::maximal(1.0, Condition::D10, d10(0.3, 1.0));
        let w = s.weights(k).unwrap();
        assert!(w.r.windows(2).all(|p| p[1] >= p[0]));
        assert!((w.r[k] / k as f64 / 0.15 - 1.0).abs() < 0.25);
    }

    #[test]
    fn linear_sums_are_quadratic() {
        let s = PenaltySchedule::linear(0.3, 1.0);
        for k in [100, 500, 2000] {
            let a = s.weights(k).unwrap().total();
            let b = s.weights(2 * k).unwrap().total();
            assert!((3.8..=4.2).contains(&(b / a)));
        }
    }

    #[test]
    fn json_layout() {
        let s: PenaltySchedule<f64> = serde_json::from_str(
            r#"{"kind":"maximal","beta0":1.0,"condition":"d10","params":{"sigma_min_AmAmT":0.5,"L":10,"gamma":1}}"#,
        )
        .unwrap();
        assert_eq!(s.condition(), Some(Condition::D10));
        assert_eq!(s.weight_rule(), WeightRule::InverseBeta);
        let s: PenaltySchedule<f64> =
            serde_json::from_str(r#"{"kind":"linear","delta":0.5}"#).unwrap();
        assert_eq!(
            s.kind,
            ScheduleKind::Linear {
                delta: 0.5,
                offset: 1.0
            }
        );
        let back: PenaltySchedule<f64> =
            serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
