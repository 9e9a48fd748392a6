//! Proximal ADMM for a linear first block, with `D^k = β^k I` or `I/β^k`.

use std::sync::OnceLock;

use super::common::{block2, scaled_at, solve_block, stack};
use super::config::{BetaScaling, MethodConfig, ProximalKind};
use crate::error::Result;
use crate::framework::{IterateState, PcMatrices, PcMethod, Prediction};
use crate::linalg::{Cholesky, DenseMatrix, DenseVector};
use crate::problems::{subproblem_residual, BlockProblem, Metric};
use crate::scalar::Scalar;

#[derive(Debug)]
pub struct Padmm<T> {
    problem: BlockProblem<T>,
    scaling: BetaScaling,
    a1ta1: DenseMatrix<T>,
    a2ta2: DenseMatrix<T>,
    /// Factor of `A₁ᵀA₁ + I`, shared by every `β` when `D = βI`.
    shifted: OnceLock<Cholesky<T>>,
}

impl<T: Scalar> Padmm<T> {
    pub fn new(problem: BlockProblem<T>, cfg: &MethodConfig<T>) -> Result<Self> {
        cfg.validate(&problem)?;
        let ProximalKind::IdentityScaled { scaling } = cfg.proximal_or_default() else {
            unreachable!("validated")
        };
        let a1ta1 = problem.block(0).a.gram();
        let a2ta2 = problem.block(1).a.gram();
        Ok(Self {
            problem,
            scaling,
            a1ta1,
            a2ta2,
            shifted: OnceLock::new(),
        })
    }

    pub fn scaling(&self) -> BetaScaling {
        self.scaling
    }

    fn a1(&self) -> &DenseMatrix<T> {
        &self.problem.block(0).a
    }

    fn a2(&self) -> &DenseMatrix<T> {
        &self.problem.block(1).a
    }

    fn n1(&self) -> usize {
        self.a1().cols()
    }

    fn n2(&self) -> usize {
        self.a2().cols()
    }

    fn l(&self) -> usize {
        self.problem.constraints()
    }

    /// Coefficient `d` in `D^k = d I`.
    fn d_coeff(&self, beta: T) -> T {
        match self.scaling {
            BetaScaling::Beta => beta,
            BetaScaling::InverseBeta => T::one() / beta,
        }
    }

    /// Matrix of the `x₁`-subproblem, `βA₁ᵀA₁ + D^k`.
    pub fn x1_system(&self, beta: T) -> DenseMatrix<T> {
        self.a1ta1.scale(beta).add_identity(self.d_coeff(beta))
    }

    fn shifted_factor(&self) -> Result<&Cholesky<T>> {
        if let Some(f) = self.shifted.get() {
            return Ok(f);
        }
        let f = Cholesky::factor(&self.a1ta1.add_identity(T::one()))?;
        Ok(self.shifted.get_or_init(|| f))
    }
}

impl<T: Scalar> PcMethod<T> for Padmm<T> {
    fn label(&self) -> &'static str {
        "padmm"
    }

    fn problem(&self) -> &BlockProblem<T> {
        &self.problem
    }

    fn v_map(&self, x_blocks: &[DenseVector<T>], lambda: &DenseVector<T>) -> DenseVector<T> {
        stack(&[&x_blocks[0], &x_blocks[1], lambda])
    }

    fn predict(&self, state: &IterateState<T>, beta: T) -> Result<(Prediction<T>, T)> {
        let (a1, a2, b) = (self.a1(), self.a2(), self.problem.b());
        let lambda = &state.lambda;
        let (x1k, x2k) = (&state.x_blocks[0], &state.x_blocks[1]);
        let a2x2k = a2.apply(x2k);
        let d = self.d_coeff(beta);

        let mut c1 = &scaled_at(a1, beta, &(&a2x2k - b)) - &a1.apply_t(lambda);
        c1.axpy(-d, x1k);
        let metric1 = Metric::Matrix(self.x1_system(beta));
        let (x1, res1) = match self.scaling {
            BetaScaling::Beta => {
                let g = self.problem.block(0).oracle.linear_coeff();
                let rhs = (-&(g + &c1)).scale(T::one() / beta);
                let x1 = self.shifted_factor()?.solve(&rhs)?;
                let res = subproblem_residual(&self.problem.block(0).oracle, &metric1, &c1, &x1)?;
                (x1, res)
            }
            BetaScaling::InverseBeta => solve_block(&self.problem.block(0).oracle, &metric1, &c1)?,
        };

        let a1x1 = a1.apply(&x1);
        let mut lambda_tilde = lambda.clone();
        lambda_tilde.axpy(-beta, &(&(&a1x1 + &a2x2k) - b));

        let c2 = &scaled_at(a2, beta, &(&a1x1 - b)) - &a2.apply_t(lambda);
        let m2 = Metric::Matrix(self.a2ta2.scale(beta));
        let (x2, res2) = solve_block(&self.problem.block(1).oracle, &m2, &c2)?;

        let v_tilde = stack(&[&x1, &x2, &lambda_tilde]);
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
        let (n1, n2, l) = (self.n1(), self.n2(), self.l());
        let one = T::one();
        let a2 = self.a2();
        let d = DenseMatrix::scaled_identity(n1, self.d_coeff(beta));
        let bj = self.a2ta2.scale(beta);
        let inv_b = DenseMatrix::scaled_identity(l, one / beta);
        let z2l = DenseMatrix::zeros(n2, l);
        let q_tail = block2(&bj, &z2l, &a2.scale(-one), &inv_b);
        let m_tail = block2(
            &DenseMatrix::identity(n2),
            &z2l,
            &a2.scale(-beta),
            &DenseMatrix::identity(l),
        );
        let h = DenseMatrix::block_diag(&[&d, &bj, &inv_b]);
        Ok(PcMatrices {
            q: DenseMatrix::block_diag(&[&d, &q_tail]),
            m: DenseMatrix::block_diag(&[&DenseMatrix::identity(n1), &m_tail]),
            g: DenseMatrix::block_diag(&[&d, &DenseMatrix::zeros(n2, n2), &inv_b]),
            h0: h.clone(),
            h,
        })
    }

    fn h0(&self, beta: T) -> DenseMatrix<T> {
        DenseMatrix::block_diag(&[
            &DenseMatrix::scaled_identity(self.n1(), self.d_coeff(beta)),
            &self.a2ta2.scale(beta),
            &DenseMatrix::scaled_identity(self.l(), T::one() / beta),
        ])
    }

    fn weight(&self, beta: T) -> T {
        match self.scaling {
            BetaScaling::Beta => T::one() / beta,
            BetaScaling::InverseBeta => beta,
        }
    }

    fn sigma_used(&self) -> T {
        self.problem.block(1).oracle.strong_convexity()
    }

    fn anchor(&self, x_blocks: &[DenseVector<T>]) -> Result<DenseVector<T>> {
        Ok(x_blocks[1].clone())
    }

    fn certifies_cc3(&self) -> bool {
        false
    }

    fn claims_psd_g(&self) -> bool {
        true
    }
}
