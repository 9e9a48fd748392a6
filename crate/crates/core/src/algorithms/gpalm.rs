//! Generalized proximal augmented Lagrangian method for a single block.

use super::common::{solve_block, stack};
use super::config::{MethodConfig, ProximalKind};
use crate::error::Result;
use crate::framework::{IterateState, PcMatrices, PcMethod, Prediction};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problems::{BlockProblem, Metric};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
enum Prox<T> {
    /// `D = D₀/β`
    Definite(DenseMatrix<T>),
    /// `D = τrβI − βAᵀA`
    Indefinite { tau: T, r: T },
}

#[derive(Debug, Clone)]
pub struct Gpalm<T> {
    problem: BlockProblem<T>,
    gamma: T,
    prox: Prox<T>,
    ata: DenseMatrix<T>,
}

impl<T: Scalar> Gpalm<T> {
    pub fn new(problem: BlockProblem<T>, cfg: &MethodConfig<T>) -> Result<Self> {
        let resolved = cfg.validate(&problem)?;
        let n = problem.total_dim();
        let prox = match (cfg.proximal_or_default(), resolved) {
            (ProximalKind::Indefinite, Some((tau, r))) => Prox::Indefinite { tau, r },
            (ProximalKind::Definite { d0 }, _) => {
                Prox::Definite(d0.unwrap_or_else(|| DenseMatrix::zeros(n, n)))
            }
            _ => unreachable!("validated"),
        };
        let ata = problem.block(0).a.gram();
        Ok(Self {
            problem,
            gamma: cfg.gamma,
            prox,
            ata,
        })
    }

    fn a(&self) -> &DenseMatrix<T> {
        &self.problem.block(0).a
    }

    fn n(&self) -> usize {
        self.problem.total_dim()
    }

    fn l(&self) -> usize {
        self.problem.constraints()
    }

    /// Proximal matrix `D^k`.
    pub fn proximal_matrix(&self, beta: T) -> DenseMatrix<T> {
        match &self.prox {
            Prox::Definite(d0) => d0.scale(T::one() / beta),
            Prox::Indefinite { tau, r } => {
                &DenseMatrix::scaled_identity(self.n(), *tau * *r * beta) - &self.ata.scale(beta)
            }
        }
    }

    /// `D₁^k = τrβI − τβAᵀA` of the indefinite splitting.
    pub fn d1(&self, beta: T) -> Option<DenseMatrix<T>> {
        match &self.prox {
            Prox::Indefinite { tau, r } => Some(
                &DenseMatrix::scaled_identity(self.n(), *tau * *r * beta)
                    - &self.ata.scale(*tau * beta),
            ),
            Prox::Definite(_) => None,
        }
    }

    /// Quadratic metric of the `x`-subproblem, `βAᵀA + D^k`. For the
    /// indefinite term the coupling cancels and this is `τrβI` exactly.
    pub fn subproblem_metric(&self, beta: T) -> Metric<T> {
        match &self.prox {
            Prox::Indefinite { tau, r } => Metric::ScaledIdentity(*tau * *r * beta),
            Prox::Definite(d0) => {
                Metric::Matrix(&self.ata.scale(beta) + &d0.scale(T::one() / beta))
            }
        }
    }
}

impl<T: Scalar> PcMethod<T> for Gpalm<T> {
    fn label(&self) -> &'static str {
        "gpalm"
    }

    fn problem(&self) -> &BlockProblem<T> {
        &self.problem
    }

    fn v_map(&self, x_blocks: &[DenseVector<T>], lambda: &DenseVector<T>) -> DenseVector<T> {
        stack(&[&x_blocks[0], lambda])
    }

    fn predict(&self, state: &IterateState<T>, beta: T) -> Result<(Prediction<T>, T)> {
        let a = self.a();
        let xk = &state.x_blocks[0];
        // linear term −Aᵀ(λ + βb) − D x^k
        let mut c = -&a.apply_t(&(&state.lambda + &self.problem.b().scale(beta)));
        c.axpy(-T::one(), &self.proximal_matrix(beta).apply(xk));
        let (x, res) = solve_block(
            &self.problem.block(0).oracle,
            &self.subproblem_metric(beta),
            &c,
        )?;
        let r = self.problem.residual(std::slice::from_ref(&x))?;
        let mut lambda_tilde = state.lambda.clone();
        lambda_tilde.axpy(-beta, &r);
        let v_tilde = stack(&[&x, &lambda_tilde]);
        Ok((
            Prediction {
                x_tilde_blocks: vec![x],
                lambda_tilde,
                v_tilde,
            },
            res,
        ))
    }

    fn correct(
        &self,
        state: &IterateState<T>,
        prediction: &Prediction<T>,
        beta: T,
    ) -> Result<IterateState<T>> {
        let r = self.problem.residual(&prediction.x_tilde_blocks)?;
        let mut lambda = state.lambda.clone();
        lambda.axpy(-self.gamma * beta, &r);
        Ok(self.state_from(
            prediction.x_tilde_blocks.clone(),
            lambda,
            state.iteration + 1,
        ))
    }

    fn matrices(&self, beta: T) -> Result<PcMatrices<T>> {
        let (n, l, g) = (self.n(), self.l(), self.gamma);
        let d = self.proximal_matrix(beta);
        let eye_n = DenseMatrix::identity(n);
        let id = |s: T| DenseMatrix::scaled_identity(l, s);
        Ok(PcMatrices {
            q: DenseMatrix::block_diag(&[&d, &id(T::one() / beta)]),
            m: DenseMatrix::block_diag(&[&eye_n, &id(g)]),
            h: DenseMatrix::block_diag(&[&d, &id(T::one() / (g * beta))]),
            g: DenseMatrix::block_diag(&[&d, &id((T::lit(2.0) - g) / beta)]),
            h0: self.h0(beta),
        })
    }

    fn h0(&self, beta: T) -> DenseMatrix<T> {
        let inv_g = DenseMatrix::scaled_identity(self.l(), T::one() / self.gamma);
        let top = match &self.prox {
            Prox::Definite(d0) => d0.clone(),
            Prox::Indefinite { tau, r } => {
                let b2 = beta * beta;
                &DenseMatrix::scaled_identity(self.n(), *tau * *r * b2)
                    + &self.ata.scale((T::one() - T::lit(2.0) * *tau) * b2)
            }
        };
        DenseMatrix::block_diag(&[&top, &inv_g])
    }

    fn weight(&self, beta: T) -> T {
        beta
    }

    fn sigma_used(&self) -> T {
        match self.prox {
            Prox::Definite(_) => T::zero(),
            Prox::Indefinite { .. } => self.problem.block(0).oracle.strong_convexity(),
        }
    }

    fn anchor(&self, x_blocks: &[DenseVector<T>]) -> Result<DenseVector<T>> {
        Ok(x_blocks[0].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::{check_cc1, check_cc2, PenaltyWindow};
    use crate::linalg::spectral_norm_sq;
    use crate::problems::{
        generate_instance, kkt_oracle, Block, BlockOracle, InstanceSpec, Template,
    };

    type V = DenseVector<f64>;

    fn one_dim() -> BlockProblem<f64> {
        let oracle =
            BlockOracle::quadratic(DenseMatrix::identity(1), V::zeros(1), 1.0, None).unwrap();
        let a = DenseMatrix::from_f64(&[&[1.0]]).unwrap();
        BlockProblem::new(vec![Block { oracle, a }], V::from_f64(&[1.0]).unwrap()).unwrap()
    }

    #[test]
    fn one_dimensional_hand_step() {
        // x − λ⁰ + (x − 1) = 0 with λ⁰ = 0 gives x = ½, then λ = 0 − (½ − 1) = ½
        let m = Gpalm::new(one_dim(), &MethodConfig::gpalm_definite(1.0, None)).unwrap();
        let s = m.zero_state();
        let (p, _) = m.predict(&s, 1.0).unwrap();
        let next = m.correct(&s, &p, 1.0).unwrap();
        assert!((next.x_blocks[0][0] - 0.5).abs() < 1e-15);
        assert!((next.lambda[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn indefinite_metric_is_scaled_identity() {
        let p =
            generate_instance::<f64>(&InstanceSpec::new(Template::P1Qp, 4).with_dims(vec![8], 3))
                .unwrap();
        let r = 1.05 * spectral_norm_sq(&p.block(0).a).unwrap();
        let m = Gpalm::new(p, &MethodConfig::gpalm_indefinite(1.0, 0.9, r)).unwrap();
        let beta = 0.7;
        // βAᵀA + D computed densely agrees with τrβI up to rounding
        let dense = &m.ata.scale(beta) + &m.proximal_matrix(beta);
        let exact = DenseMatrix::scaled_identity(8, 0.9 * r * beta);
        assert!((&dense - &exact).max_abs() < 1e-12);
        assert_eq!(
            m.subproblem_metric(beta),
            Metric::ScaledIdentity(0.9 * r * beta)
        );
        // D = D₁ − (1−τ)βAᵀA
        let d1 = m.d1(beta).unwrap();
        let rebuilt = &d1 - &m.ata.scale(0.1 * beta);
        assert!((&rebuilt - &m.proximal_matrix(beta)).max_abs() < 1e-12);
    }

    #[test]
    fn matrices_satisfy_identities_and_saddle_is_fixed() {
        let p =
            generate_instance::<f64>(&InstanceSpec::new(Template::P1Qp, 5).with_dims(vec![7], 3))
                .unwrap();
        let saddle = kkt_oracle(&p).unwrap();
        let r = 1.05 * spectral_norm_sq(&p.block(0).a).unwrap();
        for cfg in [
            MethodConfig::gpalm_definite(1.5, None),
            MethodConfig::gpalm_indefinite(1.0, 0.8, r),
        ] {
            let m = Gpalm::new(p.clone(), &cfg).unwrap();
            let mats = m.matrices(2.0).unwrap();
            assert!(check_cc1(&mats) < 1e-12);
            assert!(check_cc2(&mats) < 1e-12);
            let s = m.saddle_state(&saddle);
            let out = m
                .step(&s, PenaltyWindow::constant(2.0), &saddle, true)
                .unwrap();
            assert!((&out.next_state.v - &s.v).norm() <= 1e-10 * (1.0 + s.v.norm()));
        }
    }
}
