use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::algorithms::{build_method, MethodConfig, MethodKind};
use crate::error::{Error, Result};
use crate::framework::{run_method, Check, PcMethod, RunOptions, SolverTrace};
use crate::linalg::{extreme_eigenvalue, spectral_norm_sq, Extreme};
use crate::problems::{generate_instance, kkt_oracle, BlockProblem, InstanceSpec, SaddlePoint};
use crate::schedules::{Condition, PenaltySchedule, ScheduleKind};

/// Where the problem instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemSource {
    Generate(InstanceSpec),
    Path(PathBuf),
}

impl ProblemSource {
    pub fn load(&self) -> Result<BlockProblem<f64>> {
        match self {
            ProblemSource::Generate(spec) => generate_instance(spec),
            ProblemSource::Path(p) => BlockProblem::load(p),
        }
    }
}

/// Method configuration as written in an experiment file. `r_prox` may be
/// given directly or as a multiple of the relevant `‖A‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    #[serde(flatten)]
    pub config: MethodConfig<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_prox_factor: Option<f64>,
}

impl From<MethodConfig<f64>> for MethodSpec {
    fn from(config: MethodConfig<f64>) -> Self {
        Self {
            config,
            r_prox_factor: None,
        }
    }
}

impl MethodSpec {
    pub fn with_r_prox_factor(mut self, factor: f64) -> Self {
        self.r_prox_factor = Some(factor);
        self
    }

    /// The configuration with `r_prox` filled in from `r_prox_factor`.
    pub fn resolve(&self, problem: &BlockProblem<f64>) -> Result<MethodConfig<f64>> {
        let mut cfg = self.config.clone();
        if let Some(f) = self.r_prox_factor {
            if cfg.r_prox.is_some() {
                return Err(Error::Config(
                    "give r_prox or r_prox_factor, not both".into(),
                ));
            }
            if !(f > 1.0) {
                return Err(Error::Config(format!("r_prox_factor = {f} must exceed 1")));
            }
            let a = match cfg.method {
                MethodKind::Gpalm => &problem.block(0).a,
                MethodKind::Ladmm if problem.num_blocks() == 2 => &problem.block(1).a,
                _ => {
                    return Err(Error::Config(format!(
                        "{} takes no r_prox",
                        cfg.method.name()
                    )))
                }
            };
            cfg.r_prox = Some(f * spectral_norm_sq(a)?);
        }
        Ok(cfg)
    }
}

fn default_stride() -> usize {
    1
}

fn default_competitors() -> usize {
    50
}

/// One solver run, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: ProblemSource,
    pub method: MethodSpec,
    pub schedule: PenaltySchedule<f64>,
    pub iterations: usize,
    #[serde(default = "default_stride")]
    pub record_every: usize,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_competitors")]
    pub competitors: usize,
}

impl ExperimentSpec {
    pub fn new(
        problem: ProblemSource,
        method: MethodSpec,
        schedule: PenaltySchedule<f64>,
        iterations: usize,
    ) -> Self {
        Self {
            problem,
            method,
            schedule,
            iterations,
            record_every: 1,
            checks: Vec::new(),
            seed: 0,
            competitors: default_competitors(),
        }
    }

    pub fn with_checks(mut self, checks: &[Check]) -> Self {
        self.checks = checks.to_vec();
        self
    }

    pub fn with_record_every(mut self, stride: usize) -> Self {
        self.record_every = stride;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 10 {
            return Err(Error::Config(format!(
                "iterations = {} must be >= 10",
                self.iterations
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        Ok(())
    }

    fn run_options(&self) -> RunOptions {
        RunOptions {
            iterations: self.iterations,
            record_every: self.record_every,
            checks: self.checks.clone(),
            competitors: self.competitors,
            seed: self.seed,
        }
    }
}

/// Fills the constants of a maximal schedule that the file leaves out
/// from the method configuration and the instance.
pub fn derive_schedule(
    schedule: &PenaltySchedule<f64>,
    cfg: &MethodConfig<f64>,
    problem: &BlockProblem<f64>,
) -> Result<PenaltySchedule<f64>> {
    let mut out = schedule.clone();
    if let ScheduleKind::Maximal {
        condition, params, ..
    } = &mut out.kind
    {
        let m = problem.num_blocks();
        let sigma_block = if m == 1 { 0 } else { 1 };
        match condition {
            Condition::V25 | Condition::A16 => {
                params.tau = params.tau.or(cfg.tau);
                params.r_prox = params.r_prox.or(cfg.r_prox);
                if params.sigma.is_none() {
                    params.sigma = Some(problem.block(sigma_block).oracle.strong_convexity());
                }
            }
            Condition::C14 => {
                if params.sigma.is_none() {
                    params.sigma = Some(problem.block(sigma_block).oracle.strong_convexity());
                }
                if params.sigma_max_a2.is_none() && m >= 2 {
                    params.sigma_max_a2 = Some(spectral_norm_sq(&problem.block(1).a)?);
                }
            }
            Condition::D10 => {
                let last = problem.block(m - 1);
                if params.sigma_min_am.is_none() {
                    params.sigma_min_am =
                        Some(extreme_eigenvalue(&last.a.outer_gram(), Extreme::Min)?);
                }
                params.lipschitz = params.lipschitz.or(last.oracle.grad_lipschitz());
                params.gamma = params.gamma.or(Some(cfg.gamma));
            }
        }
    }
    out.validate()?;
    Ok(out)
}

/// Everything needed to run an experiment, before running it.
pub struct Prepared {
    pub problem: BlockProblem<f64>,
    pub saddle: SaddlePoint<f64>,
    pub config: MethodConfig<f64>,
    pub schedule: PenaltySchedule<f64>,
    pub method: Box<dyn PcMethod<f64>>,
    pub betas: Vec<f64>,
}

/// Loads the instance, certifies its saddle point, builds the method and
/// the penalty sequence, and checks that they fit together.
pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared> {
    spec.validate()?;
    let problem = spec.problem.load()?;
    let config = spec.method.resolve(&problem)?;
    let method = build_method(&problem, &config)?;
    let schedule = derive_schedule(&spec.schedule, &config, &problem)?;
    let betas = schedule.betas(spec.iterations + 1)?;
    if let Some(rule) = schedule.weight_rule {
        if let Some(k) = (0..betas.len()).find(|&k| {
            let (a, b) = (rule.apply(betas[k]), method.weight(betas[k]));
            (a - b).abs() > 1e-12 * a.abs().max(b.abs())
        }) {
            return Err(Error::Config(format!(
                "schedule weight rule {rule:?} disagrees with the weights of {} at k = {k}",
                method.label()
            )));
        }
    }
    let saddle = kkt_oracle(&problem)?;
    Ok(Prepared {
        problem,
        saddle,
        config,
        schedule,
        method,
        betas,
    })
}

/// Runs the experiment end to end. Deterministic in the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<SolverTrace<f64>> {
    let p = prepare(spec)?;
    run_method(p.method.as_ref(), &p.betas, &p.saddle, &spec.run_options())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::BetaScaling;
    use crate::problems::Template;
    use crate::schedules::WeightRule;

    fn p1(seed: u64) -> ProblemSource {
        ProblemSource::Generate(InstanceSpec::new(Template::P1Qp, seed).with_dims(vec![8], 4))
    }

    #[test]
    fn deterministic_traces() {
        let spec = ExperimentSpec::new(
            p1(3),
            MethodConfig::gpalm_definite(1.0, None).into(),
            PenaltySchedule::constant(1.0),
            20,
        )
        .with_checks(&[
            Check::Cc1,
            Check::Lemma2,
            Check::Cc3,
            Check::PredictionInequality,
        ]);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        crate::framework::write_rows_csv(&a.rows(), &mut ca).unwrap();
        crate::framework::write_rows_csv(&b.rows(), &mut cb).unwrap();
        assert_eq!(ca, cb);
        assert!(a.violations.is_empty(), "{:?}", a.violations.first());
    }

    #[test]
    fn incompatible_method_is_config_error() {
        let spec = ExperimentSpec::new(
            p1(1),
            MethodConfig::admm(1.0).into(),
            PenaltySchedule::constant(1.0),
            20,
        );
        assert!(matches!(run_experiment(&spec), Err(Error::Config(_))));
        let spec = ExperimentSpec::new(
            p1(1),
            MethodConfig::gpalm_definite(1.0, None).into(),
            PenaltySchedule::constant(1.0),
            5,
        );
        assert!(matches!(run_experiment(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn weight_rule_must_match_method() {
        let src = ProblemSource::Generate(
            InstanceSpec::new(Template::P2LinearFirst, 2).with_dims(vec![3, 5], 4),
        );
        let method: MethodSpec = MethodConfig::padmm(BetaScaling::Beta).into();
        let bad = PenaltySchedule::linear(0.5, 1.0).with_weight_rule(WeightRule::Beta);
        let spec = ExperimentSpec::new(src.clone(), method.clone(), bad, 20);
        assert!(matches!(prepare(&spec), Err(Error::Config(_))));
        let good = PenaltySchedule::linear(0.5, 1.0).with_weight_rule(WeightRule::InverseBeta);
        assert!(prepare(&ExperimentSpec::new(src, method, good, 20)).is_ok());
    }

    #[test]
    fn schedule_constants_are_derived() {
        let src =
            ProblemSource::Generate(InstanceSpec::new(Template::P1Qp, 1).with_dims(vec![6], 3));
        let method = MethodSpec::from(MethodConfig::gpalm_indefinite(1.0, 0.9, 0.0))
            .with_r_prox_factor(1.05);
        let mut method = method;
        method.config.r_prox = None;
        let spec = ExperimentSpec::new(
            src,
            method,
            PenaltySchedule::maximal(1.0, Condition::V25, Default::default()),
            10,
        );
        let p = prepare(&spec).unwrap();
        let ScheduleKind::Maximal { params, .. } = &p.schedule.kind else {
            panic!()
        };
        assert_eq!(params.tau, Some(0.9));
        assert_eq!(params.r_prox, p.config.r_prox);
        assert_eq!(params.sigma, Some(1.0));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "problem": {"generate": {"template": "p2-strongly-convex", "seed": 4, "dims": [5, 5], "l": 3}},
            "method": {"method": "ladmm", "gamma": 1.0, "tau": 0.75, "r_prox_factor": 1.05},
            "schedule": {"kind": "maximal", "beta0": 1.0, "condition": "a16"},
            "iterations": 30,
            "checks": ["cc1", "cc3", "lemma2", "prediction-inequality"]
        }"#;
        let spec = ExperimentSpec::from_json(text).unwrap();
        assert_eq!(spec.record_every, 1);
        assert_eq!(spec.competitors, 50);
        let back = ExperimentSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let trace = run_experiment(&spec).unwrap();
        assert_eq!(trace.records.len(), 30);
        assert!(
            trace.violations.is_empty(),
            "{:?}",
            trace.violations.first()
        );
    }
}
