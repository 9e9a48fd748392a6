use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{extreme_eigenvalue, is_psd, spectral_norm_sq, DenseMatrix, Extreme};
use crate::problems::BlockProblem;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Gpalm,
    Admm,
    Ladmm,
    Multiblock,
    Padmm,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Gpalm => "gpalm",
            MethodKind::Admm => "admm",
            MethodKind::Ladmm => "ladmm",
            MethodKind::Multiblock => "multiblock",
            MethodKind::Padmm => "padmm",
        }
    }

    /// Largest admissible dual step.
    pub fn gamma_max(self) -> f64 {
        match self {
            MethodKind::Gpalm => 2.0,
            MethodKind::Admm => (1.0 + 5f64.sqrt()) / 2.0,
            MethodKind::Ladmm | MethodKind::Multiblock | MethodKind::Padmm => 1.0,
        }
    }
}

/// How `D^k` scales with `β^k` in the padmm variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaScaling {
    /// `D^k = β^k I`, ergodic weight `1/β^k`.
    Beta,
    /// `D^k = I/β^k`, ergodic weight `β^k`.
    InverseBeta,
}

/// Proximal term `D^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Scalar")]
pub enum ProximalKind<T> {
    /// `D^k = D₀/β^k`; `D₀ = 0` when omitted.
    Definite {
        #[serde(default)]
        d0: Option<DenseMatrix<T>>,
    },
    /// `D^k = τ r β^k I − β^k AᵀA`.
    Indefinite,
    /// `D^k = β^k I` or `I/β^k`.
    IdentityScaled { scaling: BetaScaling },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MethodConfig<T> {
    pub method: MethodKind,
    pub gamma: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_prox: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximal: Option<ProximalKind<T>>,
}

/// Relative margin by which `r` must exceed the squared spectral norm.
pub const R_PROX_MARGIN: f64 = 1e-8;

impl<T: Scalar> MethodConfig<T> {
    pub fn new(method: MethodKind, gamma: T) -> Self {
        Self {
            method,
            gamma,
            tau: None,
            r_prox: None,
            proximal: None,
        }
    }

    pub fn gpalm_definite(gamma: T, d0: Option<DenseMatrix<T>>) -> Self {
        Self {
            proximal: Some(ProximalKind::Definite { d0 }),
            ..Self::new(MethodKind::Gpalm, gamma)
        }
    }

    pub fn gpalm_indefinite(gamma: T, tau: T, r_prox: T) -> Self {
        Self {
            tau: Some(tau),
            r_prox: Some(r_prox),
            proximal: Some(ProximalKind::Indefinite),
            ..Self::new(MethodKind::Gpalm, gamma)
        }
    }

    pub fn admm(gamma: T) -> Self {
        Self::new(MethodKind::Admm, gamma)
    }

    pub fn ladmm(tau: T, r_prox: T) -> Self {
        Self {
            tau: Some(tau),
            r_prox: Some(r_prox),
            proximal: Some(ProximalKind::Indefinite),
            ..Self::new(MethodKind::Ladmm, T::one())
        }
    }

    pub fn multiblock(gamma: T) -> Self {
        Self::new(MethodKind::Multiblock, gamma)
    }

    pub fn padmm(scaling: BetaScaling) -> Self {
        Self {
            proximal: Some(ProximalKind::IdentityScaled { scaling }),
            ..Self::new(MethodKind::Padmm, T::one())
        }
    }

    /// The proximal kind in effect, after per-method defaults.
    pub fn proximal_or_default(&self) -> ProximalKind<T> {
        match (&self.proximal, self.method) {
            (Some(p), _) => p.clone(),
            (None, MethodKind::Ladmm) => ProximalKind::Indefinite,
            (None, MethodKind::Padmm) => ProximalKind::IdentityScaled {
                scaling: BetaScaling::InverseBeta,
            },
            (None, _) => ProximalKind::Definite { d0: None },
        }
    }

    fn require_tau(&self, lo: f64) -> Result<T> {
        let tau = self
            .tau
            .ok_or_else(|| Error::Config(format!("{} needs tau", self.method.name())))?;
        if !(tau >= T::lit(lo) && tau <= T::one()) {
            return Err(Error::Config(format!("tau = {tau} outside [{lo}, 1]")));
        }
        Ok(tau)
    }

    fn require_r(&self, a: &DenseMatrix<T>) -> Result<T> {
        let r = self
            .r_prox
            .ok_or_else(|| Error::Config(format!("{} needs r_prox", self.method.name())))?;
        let norm = spectral_norm_sq(a)?;
        if !(r > norm * (T::one() + T::lit(R_PROX_MARGIN))) {
            return Err(Error::Config(format!(
                "r_prox = {r} must exceed ||A||^2 = {norm}"
            )));
        }
        Ok(r)
    }

    /// Checks the configuration against `problem` and returns the resolved
    /// `(tau, r)` when the method uses an indefinite proximal term.
    pub fn validate(&self, problem: &BlockProblem<T>) -> Result<Option<(T, T)>> {
        let m = problem.num_blocks();
        let blocks_ok = match self.method {
            MethodKind::Gpalm => m == 1,
            MethodKind::Admm | MethodKind::Ladmm | MethodKind::Padmm => m == 2,
            MethodKind::Multiblock => m >= 2,
        };
        if !blocks_ok {
            return Err(Error::Config(format!(
                "{} cannot solve a problem with {m} block(s)",
                self.method.name()
            )));
        }
        let g = self.gamma;
        if !(g > T::zero() && g <= T::lit(self.method.gamma_max()) * (T::one() + T::epsilon())) {
            return Err(Error::Config(format!(
                "gamma = {g} outside (0, {}] for {}",
                self.method.gamma_max(),
                self.method.name()
            )));
        }
        if matches!(self.method, MethodKind::Ladmm | MethodKind::Padmm) && g != T::one() {
            return Err(Error::Config(format!(
                "{} uses gamma = 1",
                self.method.name()
            )));
        }
        let prox = self.proximal_or_default();
        match self.method {
            MethodKind::Gpalm => match prox {
                ProximalKind::Indefinite => {
                    let lo = (2.0 + g.to_f64_lossy()) / 4.0;
                    let tau = self.require_tau(lo)?;
                    let r = self.require_r(&problem.block(0).a)?;
                    Ok(Some((tau, r)))
                }
                ProximalKind::Definite { d0 } => {
                    if let Some(d0) = d0 {
                        let n = problem.total_dim();
                        if d0.shape() != (n, n) {
                            return Err(Error::Config(format!("D0 must be {n}x{n}")));
                        }
                        if !is_psd(&d0, T::lit(1e-9))? {
                            return Err(Error::Config("D0 must be positive semidefinite".into()));
                        }
                    }
                    Ok(None)
                }
                ProximalKind::IdentityScaled { .. } => Err(Error::Config(
                    "gpalm takes a definite or indefinite proximal term".into(),
                )),
            },
            MethodKind::Ladmm => {
                if prox != ProximalKind::Indefinite {
                    return Err(Error::Config(
                        "ladmm uses the indefinite proximal term".into(),
                    ));
                }
                let tau = self.require_tau(0.75)?;
                let r = self.require_r(&problem.block(1).a)?;
                Ok(Some((tau, r)))
            }
            MethodKind::Padmm => {
                if !problem.block(0).oracle.is_linear() {
                    return Err(Error::Unsupported(
                        "padmm needs a linear first block".into(),
                    ));
                }
                if !matches!(prox, ProximalKind::IdentityScaled { .. }) {
                    return Err(Error::Config(
                        "padmm takes an identity-scaled proximal term".into(),
                    ));
                }
                Ok(None)
            }
            MethodKind::Admm | MethodKind::Multiblock => {
                if self.proximal.is_some() && prox != (ProximalKind::Definite { d0: None }) {
                    return Err(Error::Config(format!(
                        "{} has no proximal term",
                        self.method.name()
                    )));
                }
                if self.method == MethodKind::Multiblock {
                    let last = problem.block(m - 1);
                    if last.oracle.grad_lipschitz().is_none() {
                        return Err(Error::Config(
                            "multiblock needs a gradient-Lipschitz last block".into(),
                        ));
                    }
                    let s = extreme_eigenvalue(&last.a.outer_gram(), Extreme::Min)?;
                    if !(s > T::lit(1e-10)) {
                        return Err(Error::Rank(format!("sigma_min(A_m A_m^T) = {s}")));
                    }
                }
                Ok(None)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate_instance, InstanceSpec, Template};

    fn p1() -> BlockProblem<f64> {
        generate_instance(&InstanceSpec::new(Template::P1Qp, 1).with_dims(vec![6], 3)).unwrap()
    }

    fn p2() -> BlockProblem<f64> {
        generate_instance(
            &InstanceSpec::new(Template::P2StronglyConvex, 1).with_dims(vec![4, 4], 3),
        )
        .unwrap()
    }

    #[test]
    fn gamma_ranges() {
        assert!(MethodConfig::admm(1.6).validate(&p2()).is_ok());
        assert!(MethodConfig::admm(1.62).validate(&p2()).is_err());
        assert!(MethodConfig::gpalm_definite(2.0, None)
            .validate(&p1())
            .is_ok());
        assert!(MethodConfig::gpalm_definite(2.1, None)
            .validate(&p1())
            .is_err());
        assert!(MethodConfig::gpalm_definite(0.0, None)
            .validate(&p1())
            .is_err());
        assert!(MethodConfig::multiblock(1.2).validate(&p2()).is_err());
    }

    #[test]
    fn method_problem_compatibility() {
        assert!(matches!(
            MethodConfig::gpalm_definite(1.0, None).validate(&p2()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            MethodConfig::admm(1.0).validate(&p1()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            MethodConfig::<f64>::padmm(BetaScaling::Beta).validate(&p2()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn indefinite_needs_r_above_norm() {
        let p = p1();
        let norm = spectral_norm_sq(&p.block(0).a).unwrap();
        assert!(MethodConfig::gpalm_indefinite(1.0, 0.9, norm)
            .validate(&p)
            .is_err());
        assert!(MethodConfig::gpalm_indefinite(1.0, 0.9, 1.05 * norm)
            .validate(&p)
            .is_ok());
        // tau below (2 + gamma)/4
        assert!(MethodConfig::gpalm_indefinite(1.0, 0.7, 1.05 * norm)
            .validate(&p)
            .is_err());
        let q = p2();
        let n2 = spectral_norm_sq(&q.block(1).a).unwrap();
        assert!(MethodConfig::ladmm(0.75, 1.05 * n2).validate(&q).is_ok());
        assert!(MethodConfig::ladmm(0.7, 1.05 * n2).validate(&q).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = MethodConfig::gpalm_indefinite(1.0, 0.9, 3.5);
        let s = serde_json::to_string(&c).unwrap();
        let back: MethodConfig<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }
}
