//! Multi-block ADMM-type scheme: Gauss–Seidel prediction over all blocks
//! followed by a back-substitution correction in `v = (A₂x₂, …, A_m x_m, λ)`.

use super::common::{block2, solve_block, stack};
use super::config::MethodConfig;
use crate::error::{Error, Result};
use crate::framework::{IterateState, PcMatrices, PcMethod, Prediction};
use crate::linalg::{
    extreme_eigenvalue, solve_triangular, DenseMatrix, DenseVector, Extreme, Side,
};
use crate::problems::{BlockProblem, Metric};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Multiblock<T> {
    problem: BlockProblem<T>,
    gamma: T,
    grams: Vec<DenseMatrix<T>>,
    lipschitz: T,
    sigma_min_last: T,
}

impl<T: Scalar> Multiblock<T> {
    pub fn new(problem: BlockProblem<T>, cfg: &MethodConfig<T>) -> Result<Self> {
        cfg.validate(&problem)?;
        let m = problem.num_blocks();
        let last = problem.block(m - 1);
        let lipschitz = last.oracle.grad_lipschitz().ok_or_else(|| {
            Error::Config("multiblock needs a gradient-Lipschitz last block".into())
        })?;
        let sigma_min_last = extreme_eigenvalue(&last.a.outer_gram(), Extreme::Min)?;
        let grams = problem.blocks().iter().map(|b| b.a.gram()).collect();
        Ok(Self {
            problem,
            gamma: cfg.gamma,
            grams,
            lipschitz,
            sigma_min_last,
        })
    }

    fn l(&self) -> usize {
        self.problem.constraints()
    }

    fn m(&self) -> usize {
        self.problem.num_blocks()
    }

    /// Size of the `y`-part of `v`.
    fn ny(&self) -> usize {
        (self.m() - 1) * self.l()
    }

    /// Block lower-triangular matrix of identities.
    fn j_matrix(&self) -> DenseMatrix<T> {
        let (l, k) = (self.l(), self.m() - 1);
        let mut j = DenseMatrix::zeros(k * l, k * l);
        for bi in 0..k {
            for bj in 0..=bi {
                for t in 0..l {
                    j[(bi * l + t, bj * l + t)] = T::one();
                }
            }
        }
        j
    }

    /// `[I I … I]`, mapping the `y`-part to `Σ y_j`.
    fn sum_matrix(&self) -> DenseMatrix<T> {
        let (l, k) = (self.l(), self.m() - 1);
        let mut s = DenseMatrix::zeros(l, k * l);
        for bj in 0..k {
            for t in 0..l {
                s[(t, bj * l + t)] = T::one();
            }
        }
        s
    }

    /// `N = γ [[√β I, 0], [−√β Ĩ, I/√β]]`
    fn n_matrix(&self, beta: T) -> DenseMatrix<T> {
        let (l, ny) = (self.l(), self.ny());
        let sb = beta.sqrt();
        let g = self.gamma;
        block2(
            &DenseMatrix::scaled_identity(ny, g * sb),
            &DenseMatrix::zeros(ny, l),
            &self.sum_matrix().scale(-g * sb),
            &DenseMatrix::scaled_identity(l, g / sb),
        )
    }

    /// `Pᵀ = diag(√β Jᵀ, I/√β)`, upper triangular.
    fn p_transpose(&self, beta: T) -> DenseMatrix<T> {
        let sb = beta.sqrt();
        DenseMatrix::block_diag(&[
            &self.j_matrix().transpose().scale(sb),
            &DenseMatrix::scaled_identity(self.l(), T::one() / sb),
        ])
    }

    /// `σ_min(A_m A_mᵀ) / L`
    pub fn curvature_ratio(&self) -> T {
        self.sigma_min_last / self.lipschitz
    }

    fn y_parts(&self, v: &DenseVector<T>) -> Vec<DenseVector<T>> {
        let l = self.l();
        (0..self.m() - 1).map(|j| v.segment(j * l, l)).collect()
    }
}

impl<T: Scalar> PcMethod<T> for Multiblock<T> {
    fn label(&self) -> &'static str {
        "multiblock"
    }

    fn problem(&self) -> &BlockProblem<T> {
        &self.problem
    }

    fn v_map(&self, x_blocks: &[DenseVector<T>], lambda: &DenseVector<T>) -> DenseVector<T> {
        let ys: Vec<DenseVector<T>> = self.problem.blocks()[1..]
            .iter()
            .zip(&x_blocks[1..])
            .map(|(b, x)| b.a.apply(x))
            .collect();
        let mut parts: Vec<&DenseVector<T>> = ys.iter().collect();
        parts.push(lambda);
        stack(&parts)
    }

    fn predict(&self, state: &IterateState<T>, beta: T) -> Result<(Prediction<T>, T)> {
        let p = &self.problem;
        let lambda = &state.lambda;
        let ys = self.y_parts(&state.v);
        let mut sum_y = DenseVector::zeros(self.l());
        for y in &ys {
            sum_y = &sum_y + y;
        }
        let a1 = &p.block(0).a;
        let c1 = &a1.apply_t(&(&sum_y - p.b())).scale(beta) - &a1.apply_t(lambda);
        let (x1, mut res) = solve_block(
            &p.block(0).oracle,
            &Metric::Matrix(self.grams[0].scale(beta)),
            &c1,
        )?;

        // running A₁x̃₁ + Σ_{i<j} ỹ_i + Σ_{i≥j} y_i − b
        let mut s = &(&a1.apply(&x1) + &sum_y) - p.b();
        let mut lambda_tilde = lambda.clone();
        lambda_tilde.axpy(-beta, &s);

        let mut x_tilde = vec![x1];
        let mut y_tilde = Vec::with_capacity(ys.len());
        for (j, yj) in ys.iter().enumerate() {
            let blk = p.block(j + 1);
            let c = &blk.a.apply_t(&(&s - yj)).scale(beta) - &blk.a.apply_t(lambda);
            let (xj, rj) = solve_block(
                &blk.oracle,
                &Metric::Matrix(self.grams[j + 1].scale(beta)),
                &c,
            )?;
            res = res.max(rj);
            let yt = blk.a.apply(&xj);
            s = &(&s + &yt) - yj;
            x_tilde.push(xj);
            y_tilde.push(yt);
        }
        let mut parts: Vec<&DenseVector<T>> = y_tilde.iter().collect();
        parts.push(&lambda_tilde);
        let v_tilde = stack(&parts);
        Ok((
            Prediction {
                x_tilde_blocks: x_tilde,
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
        let d = &state.v - &prediction.v_tilde;
        let w = self.n_matrix(beta).apply(&d);
        let step = solve_triangular(&self.p_transpose(beta), &w, Side::Upper)?;
        let v = &state.v - &step;
        let lambda = v.segment(self.ny(), self.l());
        Ok(IterateState {
            x_blocks: prediction.x_tilde_blocks.clone(),
            lambda,
            v,
            iteration: state.iteration + 1,
            previous: None,
        })
    }

    fn matrices(&self, beta: T) -> Result<PcMatrices<T>> {
        let (l, ny) = (self.l(), self.ny());
        let one = T::one();
        let inv_g = one / self.gamma;
        let j = self.j_matrix();
        let sum = self.sum_matrix();
        let q = block2(
            &j.scale(beta),
            &DenseMatrix::zeros(ny, l),
            &sum.scale(-one),
            &DenseMatrix::scaled_identity(l, one / beta),
        );
        let n = self.n_matrix(beta);
        let pt = self.p_transpose(beta);
        let dim = ny + l;
        let mut m = DenseMatrix::zeros(dim, dim);
        for c in 0..dim {
            let col = DenseVector::from_vec((0..dim).map(|r| n[(r, c)]).collect());
            let sol = solve_triangular(&pt, &col, Side::Upper)?;
            for r in 0..dim {
                m[(r, c)] = sol[r];
            }
        }
        let jjt = j.matmul(&j.transpose())?;
        let h = DenseMatrix::block_diag(&[
            &jjt.scale(beta * inv_g),
            &DenseMatrix::scaled_identity(l, inv_g / beta),
        ]);
        let ntn = n.t_matmul(&n)?.scale(inv_g);
        let g = &(&q.transpose() + &q) - &ntn;
        Ok(PcMatrices {
            q,
            m,
            h,
            g,
            h0: self.h0(beta),
        })
    }

    fn h0(&self, beta: T) -> DenseMatrix<T> {
        let j = self.j_matrix();
        let inv_g = T::one() / self.gamma;
        let lam =
            T::one() / (beta * beta) + (T::one() - self.gamma) * self.curvature_ratio() / beta;
        DenseMatrix::block_diag(&[
            &j.matmul(&j.transpose()).expect("square").scale(inv_g),
            &DenseMatrix::scaled_identity(self.l(), inv_g * lam),
        ])
    }

    fn weight(&self, beta: T) -> T {
        T::one() / beta
    }

    fn sigma_used(&self) -> T {
        T::one() / self.lipschitz
    }

    /// `∇f_m(x_m)`
    fn anchor(&self, x_blocks: &[DenseVector<T>]) -> Result<DenseVector<T>> {
        let m = self.m();
        self.problem
            .block(m - 1)
            .oracle
            .smooth_gradient(&x_blocks[m - 1])
    }

    fn claims_psd_g(&self) -> bool {
        true
    }
}
