//! Linearized ADMM: the second block carries the indefinite proximal term
//! `τrβI − βA₂ᵀA₂`, so its subproblem has a scaled-identity metric.

use super::common::{block2, scaled_at, solve_block, stack};
use super::config::MethodConfig;
use crate::error::Result;
use crate::framework::{IterateState, PcMatrices, PcMethod, Prediction};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problems::{BlockProblem, Metric};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Ladmm<T> {
    problem: BlockProblem<T>,
    tau: T,
    r: T,
    a1ta1: DenseMatrix<T>,
    a2ta2: DenseMatrix<T>,
}

impl<T: Scalar> Ladmm<T> {
    pub fn new(problem: BlockProblem<T>, cfg: &MethodConfig<T>) -> Result<Self> {
        let (tau, r) = cfg.validate(&problem)?.expect("ladmm resolves tau and r");
        let a1ta1 = problem.block(0).a.gram();
        let a2ta2 = problem.block(1).a.gram();
        Ok(Self {
            problem,
            tau,
            r,
            a1ta1,
            a2ta2,
        })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn r_prox(&self) -> T {
        self.r
    }

    fn a1(&self) -> &DenseMatrix<T> {
        &self.problem.block(0).a
    }

    fn a2(&self) -> &DenseMatrix<T> {
        &self.problem.block(1).a
    }

    fn l(&self) -> usize {
        self.problem.constraints()
    }

    fn n2(&self) -> usize {
        self.a2().cols()
    }

    /// `W(β) = τrβ²I + (1−2τ)β²A₂ᵀA₂`
    pub fn w_matrix(&self, beta: T) -> DenseMatrix<T> {
        let b2 = beta * beta;
        &DenseMatrix::scaled_identity(self.n2(), self.tau * self.r * b2)
            + &self.a2ta2.scale((T::one() - T::lit(2.0) * self.tau) * b2)
    }
}

impl<T: Scalar> PcMethod<T> for Ladmm<T> {
    fn label(&self) -> &'static str {
        "ladmm"
    }

    fn problem(&self) -> &BlockProblem<T> {
        &self.problem
    }

    fn v_map(&self, x_blocks: &[DenseVector<T>], lambda: &DenseVector<T>) -> DenseVector<T> {
        stack(&[&x_blocks[1], lambda])
    }

    fn predict(&self, state: &IterateState<T>, beta: T) -> Result<(Prediction<T>, T)> {
        let (a1, a2, b) = (self.a1(), self.a2(), self.problem.b());
        let lambda = &state.lambda;
        let x2k = &state.x_blocks[1];
        let a2x2k = a2.apply(x2k);

        let c1 = &scaled_at(a1, beta, &(&a2x2k - b)) - &a1.apply_t(lambda);
        let m1 = Metric::Matrix(self.a1ta1.scale(beta));
        let (x1, res1) = solve_block(&self.problem.block(0).oracle, &m1, &c1)?;

        let resid = &(&a1.apply(&x1) + &a2x2k) - b;
        let mut lambda_tilde = lambda.clone();
        lambda_tilde.axpy(-beta, &resid);

        let trb = self.tau * self.r * beta;
        let mut c2 = &scaled_at(a2, beta, &resid) - &a2.apply_t(lambda);
        c2.axpy(-trb, x2k);
        let (x2, res2) = solve_block(
            &self.problem.block(1).oracle,
            &Metric::ScaledIdentity(trb),
            &c2,
        )?;

        let v_tilde = stack(&[&x2, &lambda_tilde]);
        Ok((
            Prediction {
                x_tilde_blocks: vec![x1, x2],
                lambda_tilde,
                v_tilde,
            },
            res1.max(res2),
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
        lambda.axpy(-beta, &r);
        Ok(self.state_from(
            prediction.x_tilde_blocks.clone(),
            lambda,
            state.iteration + 1,
        ))
    }

    fn matrices(&self, beta: T) -> Result<PcMatrices<T>> {
        let (l, n2) = (self.l(), self.n2());
        let one = T::one();
        let trb = self.tau * self.r * beta;
        let a2 = self.a2();
        let zero_nl = DenseMatrix::zeros(n2, l);
        let inv_b = DenseMatrix::scaled_identity(l, one / beta);
        let top = DenseMatrix::scaled_identity(n2, trb);
        Ok(PcMatrices {
            q: block2(&top, &zero_nl, &a2.scale(-one), &inv_b),
            m: block2(
                &DenseMatrix::identity(n2),
                &zero_nl,
                &a2.scale(-beta),
                &DenseMatrix::identity(l),
            ),
            h: DenseMatrix::block_diag(&[&top, &inv_b]),
            g: DenseMatrix::block_diag(&[&(&top - &self.a2ta2.scale(beta)), &inv_b]),
            h0: self.h0(beta),
        })
    }

    fn h0(&self, beta: T) -> DenseMatrix<T> {
        DenseMatrix::block_diag(&[
            &DenseMatrix::scaled_identity(self.n2(), self.tau * self.r * beta * beta),
            &DenseMatrix::identity(self.l()),
        ])
    }

    fn weight(&self, beta: T) -> T {
        beta
    }

    fn sigma_used(&self) -> T {
        self.problem.block(1).oracle.strong_convexity()
    }

    fn anchor(&self, x_blocks: &[DenseVector<T>]) -> Result<DenseVector<T>> {
        Ok(x_blocks[1].clone())
    }

    /// `½‖x₂^{k−1} − x₂^k‖²_{W(β^k)}`
    fn theta(&self, state: &IterateState<T>, _beta_prev: T, beta: T) -> T {
        match &state.previous {
            Some(prev) => {
                let d = &prev[1] - &state.x_blocks[1];
                T::lit(0.5) * self.w_matrix(beta).quad_form(&d)
            }
            None => T::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::{check_cc1, check_cc2, PenaltyWindow};
    use crate::linalg::spectral_norm_sq;
    use crate::problems::{generate_instance, kkt_oracle, InstanceSpec, OracleKind, Template};

    fn lasso() -> BlockProblem<f64> {
        generate_instance(&InstanceSpec::new(Template::P2LassoLike, 7).with_dims(vec![5, 6], 4))
            .unwrap()
    }

    fn method(p: &BlockProblem<f64>) -> Ladmm<f64> {
        let r = 1.05 * spectral_norm_sq(&p.block(1).a).unwrap();
        Ladmm::new(p.clone(), &MethodConfig::ladmm(0.8, r)).unwrap()
    }

    #[test]
    fn l1_subproblem_satisfies_subgradient_condition() {
        let p = lasso();
        let m = method(&p);
        let saddle = kkt_oracle(&p).unwrap();
        let mut s = m.zero_state();
        let beta = 0.9;
        for _ in 0..5 {
            let out = m
                .step(&s, PenaltyWindow::constant(beta), &saddle, false)
                .unwrap();
            assert!(out.subproblem_residual < 1e-10);
            // rebuild w = −(c + τrβ x̃₂) and test it against ∂f₂ componentwise
            let OracleKind::QuadraticL1 { p_diag, q, mu } = p.block(1).oracle.kind() else {
                panic!("lasso-like second block");
            };
            let a2 = &p.block(1).a;
            let x1 = &out.prediction.x_tilde_blocks[0];
            let x2 = &out.prediction.x_tilde_blocks[1];
            let resid = &(&(&p.block(0).a.apply(x1) + &a2.apply(&s.x_blocks[1])) - p.b());
            let trb = m.tau() * m.r_prox() * beta;
            let mut w = &a2.apply_t(&s.lambda) - &a2.apply_t(resid).scale(beta);
            w.axpy(trb, &s.x_blocks[1]);
            w.axpy(-trb, x2);
            for j in 0..x2.dim() {
                let smooth = p_diag[j] * x2[j] + q[j];
                let g = w[j] - smooth;
                if x2[j] != 0.0 {
                    assert!((g - mu * x2[j].signum()).abs() < 1e-9);
                } else {
                    assert!(g.abs() <= mu + 1e-9);
                }
            }
            s = out.next_state;
        }
    }

    #[test]
    fn identities_and_fixed_point() {
        let p = lasso();
        let m = method(&p);
        let saddle = kkt_oracle(&p).unwrap();
        let mats = m.matrices(1.7).unwrap();
        assert!(check_cc1(&mats) < 1e-12);
        assert!(check_cc2(&mats) < 1e-12);
        let s = m.saddle_state(&saddle);
        let out = m
            .step(&s, PenaltyWindow::constant(1.7), &saddle, false)
            .unwrap();
        assert!((&out.next_state.v - &s.v).max_abs() < 1e-8);
        assert!(m.theta(&s, 1.7, 1.7) == 0.0);
    }
}
