//! Two-block ADMM with dual step `γ`.

use super::common::{block2, scaled_at, solve_block, stack};
use super::config::MethodConfig;
use crate::error::Result;
use crate::framework::{IterateState, PcMatrices, PcMethod, Prediction};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problems::{BlockProblem, Metric};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Admm<T> {
    problem: BlockProblem<T>,
    gamma: T,
    a1ta1: DenseMatrix<T>,
    a2ta2: DenseMatrix<T>,
}

impl<T: Scalar> Admm<T> {
    pub fn new(problem: BlockProblem<T>, cfg: &MethodConfig<T>) -> Result<Self> {
        cfg.validate(&problem)?;
        let a1ta1 = problem.block(0).a.gram();
        let a2ta2 = problem.block(1).a.gram();
        Ok(Self {
            problem,
            gamma: cfg.gamma,
            a1ta1,
            a2ta2,
        })
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
}

impl<T: Scalar> PcMethod<T> for Admm<T> {
    fn label(&self) -> &'static str {
        "admm"
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

        let c1 = &scaled_at(a1, beta, &(&a2.apply(x2k) - b)) - &a1.apply_t(lambda);
        let m1 = Metric::Matrix(self.a1ta1.scale(beta));
        let (x1, res1) = solve_block(&self.problem.block(0).oracle, &m1, &c1)?;

        let a1x1 = a1.apply(&x1);
        let mut lambda_tilde = lambda.clone();
        lambda_tilde.axpy(-beta, &(&(&a1x1 + &a2.apply(x2k)) - b));

        let c2 = &scaled_at(a2, beta, &(&a1x1 - b)) - &a2.apply_t(lambda);
        let m2 = Metric::Matrix(self.a2ta2.scale(beta));
        let (x2, res2) = solve_block(&self.problem.block(1).oracle, &m2, &c2)?;

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
        lambda.axpy(-self.gamma * beta, &r);
        Ok(self.state_from(
            prediction.x_tilde_blocks.clone(),
            lambda,
            state.iteration + 1,
        ))
    }

    fn matrices(&self, beta: T) -> Result<PcMatrices<T>> {
        let (l, n2, g) = (self.l(), self.n2(), self.gamma);
        let a2 = self.a2();
        let one = T::one();
        let bj = self.a2ta2.scale(beta);
        let zero_nl = DenseMatrix::zeros(n2, l);
        let id = |s: T| DenseMatrix::scaled_identity(l, s);
        let q = block2(&bj, &zero_nl, &a2.scale(-one), &id(one / beta));
        let m = block2(
            &DenseMatrix::identity(n2),
            &zero_nl,
            &a2.scale(-g * beta),
            &id(g),
        );
        let h = DenseMatrix::block_diag(&[&bj, &id(one / (g * beta))]);
        let c = one - g;
        let gm = block2(
            &bj.scale(c),
            &a2.transpose().scale(-c),
            &a2.scale(-c),
            &id((T::lit(2.0) - g) / beta),
        );
        Ok(PcMatrices {
            q,
            m,
            h,
            g: gm,
            h0: self.h0(beta),
        })
    }

    fn h0(&self, beta: T) -> DenseMatrix<T> {
        DenseMatrix::block_diag(&[
            &self.a2ta2.scale(beta * beta),
            &DenseMatrix::scaled_identity(self.l(), T::one() / self.gamma),
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

    /// `(1−γ)² β_{k−1}² ‖A x^k − b‖²`
    fn theta(&self, state: &IterateState<T>, beta_prev: T, _beta: T) -> T {
        let c = (T::one() - self.gamma) * beta_prev;
        let r = self
            .problem
            .residual(&state.x_blocks)
            .map(|r| r.norm_sq())
            .unwrap_or(T::nan());
        c * c * r
    }

    fn claims_psd_g(&self) -> bool {
        self.gamma == T::one()
    }
}
