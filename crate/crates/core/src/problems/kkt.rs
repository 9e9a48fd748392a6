//! Reference saddle-point oracle.
//!
//! Purely quadratic/linear instances are solved through the equality KKT
//! system directly. Instances carrying an ℓ1 term first run a linearized
//! augmented Lagrangian loop to locate the active set, then polish by
//! solving the KKT system restricted to that set with fixed signs. Either
//! way the returned point is certified before it is handed out.

use super::oracle::{BlockOracle, OracleKind};
use super::problem::{BlockProblem, SaddlePoint};
use crate::error::{Error, Result};
use crate::linalg::{lu_solve, spectral_norm_sq, Cholesky, DenseMatrix, DenseVector};
use crate::scalar::Scalar;

const MAX_ALM_ITERS: usize = 200_000;
const POLISH_EVERY: usize = 25;

/// Certified saddle point of `problem`.
pub fn kkt_oracle<T: Scalar>(problem: &BlockProblem<T>) -> Result<SaddlePoint<T>> {
    let has_l1 = problem
        .blocks()
        .iter()
        .any(|b| b.oracle.l1_weight() > T::zero());
    if !has_l1 {
        let all: Vec<Status> = vec![Status::Free; problem.total_dim()];
        let (x, lambda) = restricted_kkt(problem, &all)?;
        return finish(problem, x, lambda);
    }
    if problem.a_full().max_abs() == T::zero() && problem.b().max_abs() > T::zero() {
        return Err(Error::Degenerate(
            "A = 0 with b != 0 has no feasible point".into(),
        ));
    }
    l1_active_set(problem)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Free,
    Zero,
    Signed(bool),
}

fn finish<T: Scalar>(
    problem: &BlockProblem<T>,
    x: DenseVector<T>,
    lambda: DenseVector<T>,
) -> Result<SaddlePoint<T>> {
    let xs = problem.split(&x)?;
    let objective_star = problem.objective(&xs)?;
    let saddle = SaddlePoint {
        x_star: x,
        lambda_star: lambda,
        objective_star,
    };
    saddle.certify(problem)?;
    Ok(saddle)
}

/// Solves the KKT system with the ℓ1 terms frozen according to `status`:
/// `Zero` coordinates are pinned at 0 and `Signed` coordinates contribute
/// `±mu` to the linear term.
fn restricted_kkt<T: Scalar>(
    problem: &BlockProblem<T>,
    status: &[Status],
) -> Result<(DenseVector<T>, DenseVector<T>)> {
    let n = problem.total_dim();
    let l = problem.constraints();
    let mut hess = DenseMatrix::zeros(n, n);
    let mut q = Vec::with_capacity(n);
    let mut mus = Vec::with_capacity(n);
    let mut offset = 0;
    for blk in problem.blocks() {
        let h = blk.oracle.hessian();
        hess.set_block(offset, offset, &h);
        q.extend_from_slice(blk.oracle.linear_coeff().as_slice());
        mus.extend(std::iter::repeat_n(
            blk.oracle.l1_weight(),
            blk.oracle.dim(),
        ));
        offset += blk.oracle.dim();
    }
    let a = problem.a_full();
    let active: Vec<usize> = (0..n).filter(|&j| status[j] != Status::Zero).collect();
    let na = active.len();
    let mut k = DenseMatrix::zeros(na + l, na + l);
    let mut rhs = vec![T::zero(); na + l];
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            k[(r, c)] = hess[(i, j)];
        }
        for row in 0..l {
            k[(r, na + row)] = a[(row, i)];
            k[(na + row, r)] = a[(row, i)];
        }
        let shift = match status[i] {
            Status::Signed(true) => mus[i],
            Status::Signed(false) => -mus[i],
            _ => T::zero(),
        };
        rhs[r] = -(q[i] + shift);
    }
    for row in 0..l {
        rhs[na + row] = problem.b()[row];
    }
    let rhs = DenseVector::from_vec(rhs);
    let mut sol = lu_solve(&k, &rhs).map_err(|e| match e {
        Error::Singular(_) => Error::Degenerate("KKT system is singular".into()),
        other => other,
    })?;
    // one step of iterative refinement
    let resid = &rhs - &k.apply(&sol);
    if let Ok(corr) = lu_solve(&k, &resid) {
        sol.axpy(T::one(), &corr);
    }
    let mut x = DenseVector::zeros(n);
    for (r, &i) in active.iter().enumerate() {
        x[i] = sol[r];
    }
    // the system was written for (x, −λ)
    let lambda = DenseVector::from_vec((0..l).map(|row| -sol[na + row]).collect());
    Ok((x, lambda))
}

enum BlockSolver<T> {
    Factored(Cholesky<T>),
    Diagonal { diag: Vec<T>, mu: T },
}

impl<T: Scalar> BlockSolver<T> {
    fn new(oracle: &BlockOracle<T>, rho: T) -> Result<Self> {
        Ok(match oracle.kind() {
            OracleKind::Quadratic { p, .. } => {
                BlockSolver::Factored(Cholesky::factor(&p.add_identity(rho))?)
            }
            OracleKind::QuadraticL1 { p_diag, mu, .. } => BlockSolver::Diagonal {
                diag: p_diag.iter().map(|&d| d + rho).collect(),
                mu: *mu,
            },
            OracleKind::Linear { g } => BlockSolver::Diagonal {
                diag: vec![rho; g.dim()],
                mu: T::zero(),
            },
        })
    }

    /// argmin f(x) + cᵀx + (ρ/2)‖x‖², with `rhs = −(q + c)`.
    fn solve(&self, rhs: &DenseVector<T>) -> Result<DenseVector<T>> {
        match self {
            BlockSolver::Factored(ch) => ch.solve(rhs),
            BlockSolver::Diagonal { diag, mu } => Ok(DenseVector::from_vec(
                rhs.iter()
                    .zip(diag)
                    .map(|(&r, &d)| {
                        let s = if r > *mu {
                            r - *mu
                        } else if r < -*mu {
                            r + *mu
                        } else {
                            T::zero()
                        };
                        s / d
                    })
                    .collect(),
            )),
        }
    }
}

fn l1_active_set<T: Scalar>(problem: &BlockProblem<T>) -> Result<SaddlePoint<T>> {
    let a = problem.a_full();
    let beta = T::one();
    let rho = T::lit(1.01) * beta * spectral_norm_sq(&a)? + T::lit(1e-12);
    let solvers: Vec<BlockSolver<T>> = problem
        .blocks()
        .iter()
        .map(|b| BlockSolver::new(&b.oracle, rho))
        .collect::<Result<_>>()?;
    let mut xs = problem.zero_blocks();
    let mut lambda = DenseVector::zeros(problem.constraints());
    let mut last_err = None;
    for it in 1..=MAX_ALM_ITERS {
        let r = problem.residual(&xs)?;
        let mut w = r.scale(beta);
        w.axpy(-T::one(), &lambda);
        for ((blk, solver), xi) in problem.blocks().iter().zip(&solvers).zip(xs.iter_mut()) {
            // c = A_iᵀ(β r − λ) − ρ x_i ;  rhs = −(q + c)
            let mut c = blk.a.apply_t(&w);
            c.axpy(-rho, xi);
            let rhs = -&(blk.oracle.linear_coeff() + &c);
            *xi = solver.solve(&rhs)?;
        }
        lambda.axpy(-beta, &problem.residual(&xs)?);
        if it % POLISH_EVERY == 0 {
            let x = DenseVector::concat(xs.iter());
            match polish(problem, &x) {
                Ok(s) => return Ok(s),
                Err(e) => last_err = Some(e),
            }
        }
    }
    Err(Error::OracleFailure(format!(
        "active-set polishing did not certify after {MAX_ALM_ITERS} iterations: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

fn polish<T: Scalar>(problem: &BlockProblem<T>, x: &DenseVector<T>) -> Result<SaddlePoint<T>> {
    let scale = T::one() + x.max_abs();
    let mut last = Error::OracleFailure("no threshold tried".into());
    for thr in [1e-5, 1e-7, 1e-9] {
        let thr = T::lit(thr) * scale;
        let mut status = Vec::with_capacity(x.dim());
        let mut offset = 0;
        for blk in problem.blocks() {
            let mu = blk.oracle.l1_weight();
            for j in 0..blk.oracle.dim() {
                let v = x[offset + j];
                status.push(if mu == T::zero() {
                    Status::Free
                } else if v.abs() <= thr {
                    Status::Zero
                } else {
                    Status::Signed(v > T::zero())
                });
            }
            offset += blk.oracle.dim();
        }
        match restricted_kkt(problem, &status).and_then(|(x, l)| finish(problem, x, l)) {
            Ok(s) => return Ok(s),
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::problem::Block;

    type M = DenseMatrix<f64>;
    type V = DenseVector<f64>;

    fn single(p: M, a: M, b: &[f64]) -> BlockProblem<f64> {
        let n = p.rows();
        let oracle = BlockOracle::quadratic(p, V::zeros(n), 0.0, None).unwrap();
        BlockProblem::new(vec![Block { oracle, a }], V::from_f64(b).unwrap()).unwrap()
    }

    #[test]
    fn identity_qp_single_constraint() {
        let p = single(M::identity(2), M::from_f64(&[&[1.0, 0.0]]).unwrap(), &[1.0]);
        let s = kkt_oracle(&p).unwrap();
        assert!((s.x_star[0] - 1.0).abs() < 1e-14 && s.x_star[1].abs() < 1e-14);
        assert!((s.lambda_star[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_variable_sum_constraint() {
        let p = single(M::identity(2), M::from_f64(&[&[1.0, 1.0]]).unwrap(), &[1.0]);
        let s = kkt_oracle(&p).unwrap();
        assert!((s.x_star[0] - 0.5).abs() < 1e-14 && (s.x_star[1] - 0.5).abs() < 1e-14);
        assert!((s.lambda_star[0] - 0.5).abs() < 1e-14);
        assert!((s.objective_star - 0.25).abs() < 1e-14);
    }

    #[test]
    fn infeasible_rank_is_degenerate() {
        let p = single(M::identity(2), M::zeros(1, 2), &[1.0]);
        assert!(matches!(kkt_oracle(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn l1_instance_is_certified() {
        // min ½x₁² + (½x₂² + |x₂|)  s.t.  x₁ + x₂ = 3
        // x₂ > 0: x₁ = λ, x₂ + 1 = λ, x₁ + x₂ = 3 → λ = 2, x = (2, 1)
        let f1 = BlockOracle::quadratic(M::identity(1), V::zeros(1), 1.0, None).unwrap();
        let f2 =
            BlockOracle::quadratic_l1(V::from_f64(&[1.0]).unwrap(), V::zeros(1), 1.0, 1.0).unwrap();
        let a = M::from_f64(&[&[1.0]]).unwrap();
        let p = BlockProblem::new(
            vec![
                Block {
                    oracle: f1,
                    a: a.clone(),
                },
                Block { oracle: f2, a },
            ],
            V::from_f64(&[3.0]).unwrap(),
        )
        .unwrap();
        let s = kkt_oracle(&p).unwrap();
        assert!((s.x_star[0] - 2.0).abs() < 1e-12);
        assert!((s.x_star[1] - 1.0).abs() < 1e-12);
        assert!((s.lambda_star[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn l1_instance_with_zero_coordinate() {
        // b small enough that the ℓ1 block stays at zero: x₂ = 0 requires |λ| ≤ 1
        let f1 = BlockOracle::quadratic(M::identity(1), V::zeros(1), 1.0, None).unwrap();
        let f2 =
            BlockOracle::quadratic_l1(V::from_f64(&[1.0]).unwrap(), V::zeros(1), 1.0, 1.0).unwrap();
        let a = M::from_f64(&[&[1.0]]).unwrap();
        let p = BlockProblem::new(
            vec![
                Block {
                    oracle: f1,
                    a: a.clone(),
                },
                Block { oracle: f2, a },
            ],
            V::from_f64(&[0.5]).unwrap(),
        )
        .unwrap();
        let s = kkt_oracle(&p).unwrap();
        assert!((s.x_star[0] - 0.5).abs() < 1e-12);
        assert_eq!(s.x_star[1], 0.0);
    }
}
