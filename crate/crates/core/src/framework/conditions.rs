//! Numerical checks of the convergence conditions and of the prediction
//! inequality, evaluated on materialized matrices.

use serde::{Deserialize, Serialize};

use super::state::Prediction;
use crate::error::Result;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problems::BlockProblem;
use crate::scalar::Scalar;

/// Per-iteration matrices `Q, M, H, G, H₀` of a prediction-correction
/// method, all of dimension `dim(v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PcMatrices<T> {
    pub q: DenseMatrix<T>,
    pub m: DenseMatrix<T>,
    pub h: DenseMatrix<T>,
    pub g: DenseMatrix<T>,
    pub h0: DenseMatrix<T>,
}

impl<T: Scalar> PcMatrices<T> {
    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    /// `v^{k+1} = v^k − M(v^k − ṽ)`
    pub fn corrected(&self, v_k: &DenseVector<T>, v_tilde: &DenseVector<T>) -> DenseVector<T> {
        v_k - &self.m.apply(&(v_k - v_tilde))
    }
}

/// Certificate data for one iteration. `R = I` for every method here, so
/// the `‖·‖_R` terms are Euclidean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CertRecord<T> {
    pub k: usize,
    pub r_k: T,
    pub theta_k: T,
    pub theta_next: T,
    pub z_k: DenseVector<T>,
    pub z_prime: DenseVector<T>,
    pub sigma_used: T,
    pub cc1_residual: Option<T>,
    pub cc3_slack: Option<T>,
}

/// `‖Q − H·M‖_F`
pub fn check_cc1<T: Scalar>(m: &PcMatrices<T>) -> T {
    (&m.q - &(&m.h * &m.m)).frobenius_norm()
}

/// `‖G − (Qᵀ + Q − MᵀHM)‖_F`
pub fn check_cc2<T: Scalar>(m: &PcMatrices<T>) -> T {
    let mthm = m.m.t_matmul(&(&m.h * &m.m)).expect("square matrices");
    let expected = &(&m.q.transpose() + &m.q) - &mthm;
    (&m.g - &expected).frobenius_norm()
}

fn sq_norm_in<T: Scalar>(metric: &DenseMatrix<T>, x: &DenseVector<T>) -> T {
    metric.quad_form(x)
}

/// `1 + |‖v^k − v'‖²_H| + ‖v^k − ṽ^k‖²`, the yardstick for relative
/// slack tolerances.
pub fn check_scale<T: Scalar>(
    m: &PcMatrices<T>,
    v_k: &DenseVector<T>,
    v_tilde: &DenseVector<T>,
    v_ref: &DenseVector<T>,
) -> T {
    T::one() + sq_norm_in(&m.h, &(v_k - v_ref)).abs() + (v_k - v_tilde).norm_sq()
}

/// Absolute difference between the two sides of
/// `(v−ṽ)ᵀQ(v^k−ṽ) = ½(‖v^{k+1}−v‖²_H − ‖v^k−v‖²_H) + ½‖v^k−ṽ‖²_G`
/// with `v^{k+1} = v^k − M(v^k−ṽ)`.
pub fn lemma2_identity_check<T: Scalar>(
    m: &PcMatrices<T>,
    v_k: &DenseVector<T>,
    v_tilde: &DenseVector<T>,
    v_ref: &DenseVector<T>,
) -> T {
    let half = T::lit(0.5);
    let d = v_k - v_tilde;
    let lhs = m.q.bilinear(&(v_ref - v_tilde), &d);
    let v_next = m.corrected(v_k, v_tilde);
    let rhs = half * (sq_norm_in(&m.h, &(&v_next - v_ref)) - sq_norm_in(&m.h, &(v_k - v_ref)))
        + half * sq_norm_in(&m.g, &d);
    (lhs - rhs).abs()
}

/// Inputs of the third convergence condition that change per iteration.
pub struct Cc3Inputs<'a, T> {
    pub v_k: &'a DenseVector<T>,
    pub v_next: &'a DenseVector<T>,
    pub v_tilde: &'a DenseVector<T>,
    pub v_ref: &'a DenseVector<T>,
}

/// `LHS − RHS` of
/// `r^k(‖v^{k+1}−v'‖²_H + σ‖z^k−z'‖² − ‖v^k−v'‖²_H + ‖v^k−ṽ‖²_G)
///   ≥ ‖v^{k+1}−v'‖²_{H₀^{k+1}} − ‖v^k−v'‖²_{H₀^k} + Θ^{k+1} − Θ^k`.
pub fn check_cc3<T: Scalar>(
    cert: &CertRecord<T>,
    m: &PcMatrices<T>,
    h0_next: &DenseMatrix<T>,
    v: Cc3Inputs<'_, T>,
) -> T {
    let e_next = v.v_next - v.v_ref;
    let e_k = v.v_k - v.v_ref;
    let lhs = cert.r_k
        * (sq_norm_in(&m.h, &e_next) + cert.sigma_used * (&cert.z_k - &cert.z_prime).norm_sq()
            - sq_norm_in(&m.h, &e_k)
            + sq_norm_in(&m.g, &(v.v_k - v.v_tilde)));
    let rhs =
        sq_norm_in(h0_next, &e_next) - sq_norm_in(&m.h0, &e_k) + cert.theta_next - cert.theta_k;
    lhs - rhs
}

/// One competitor point `u = (x, λ)` with its `v` and `z` images.
pub struct Competitor<T> {
    pub x_blocks: Vec<DenseVector<T>>,
    pub lambda: DenseVector<T>,
    pub v: DenseVector<T>,
    pub z: DenseVector<T>,
}

/// Slack and scale of the prediction inequality
/// `f(x) − f(x̃) + (u−ũ)ᵀF(ũ) ≥ (v−ṽ)ᵀQ(v^k−ṽ) + (σ/2)‖z^k − z‖²`
/// at one competitor. The scale is `1 + Σ|terms|`.
pub fn prediction_inequality_slack<T: Scalar>(
    problem: &BlockProblem<T>,
    prediction: &Prediction<T>,
    q: &DenseMatrix<T>,
    v_k: &DenseVector<T>,
    sigma: T,
    z_k: &DenseVector<T>,
    u: &Competitor<T>,
) -> Result<(T, T)> {
    let f_x = problem.objective(&u.x_blocks)?;
    let f_t = problem.objective(&prediction.x_tilde_blocks)?;
    let mut cross = T::zero();
    for ((blk, xi), ti) in problem
        .blocks()
        .iter()
        .zip(&u.x_blocks)
        .zip(&prediction.x_tilde_blocks)
    {
        cross -= blk.a.apply_t(&prediction.lambda_tilde).dot(&(xi - ti));
    }
    let resid = problem.residual(&prediction.x_tilde_blocks)?;
    let dual = (&u.lambda - &prediction.lambda_tilde).dot(&resid);
    let quad = q.bilinear(&(&u.v - &prediction.v_tilde), &(v_k - &prediction.v_tilde));
    let strong = T::lit(0.5) * sigma * (z_k - &u.z).norm_sq();
    let slack = f_x - f_t + cross + dual - quad - strong;
    let scale =
        T::one() + f_x.abs() + f_t.abs() + cross.abs() + dual.abs() + quad.abs() + strong.abs();
    Ok((slack, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;
    type V = DenseVector<f64>;

    fn mats(q: M, m: M, h: M) -> PcMatrices<f64> {
        let g = &(&q.transpose() + &q) - &m.t_matmul(&(&h * &m)).unwrap();
        let h0 = h.clone();
        PcMatrices { q, m, h, g, h0 }
    }

    #[test]
    fn cc1_scalar_admm_example() {
        let q = M::from_f64(&[&[1.0, 0.0], &[-1.0, 1.0]]).unwrap();
        let m = M::from_f64(&[&[1.0, 0.0], &[-1.0, 1.0]]).unwrap();
        let pc = mats(q, m, M::identity(2));
        assert_eq!(check_cc1(&pc), 0.0);
        assert_eq!(check_cc2(&pc), 0.0);
    }

    #[test]
    fn cc1_trivial_cases() {
        let q = M::from_f64(&[&[2.0, 1.0], &[0.0, 3.0]]).unwrap();
        let pc = mats(q.clone(), M::identity(2), q);
        assert_eq!(check_cc1(&pc), 0.0);
        let pc = PcMatrices {
            q: M::identity(2).scale(2.0),
            m: M::identity(2),
            h: M::identity(2),
            g: M::identity(2),
            h0: M::identity(2),
        };
        assert!((check_cc1(&pc) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cc2_gpalm_unit_case() {
        let pc = mats(M::identity(2), M::identity(2), M::identity(2));
        assert_eq!(pc.g, M::identity(2));
        assert_eq!(check_cc2(&pc), 0.0);
    }

    #[test]
    fn lemma2_zero_displacement() {
        let pc = mats(M::identity(2), M::identity(2), M::identity(2));
        let v = V::from_f64(&[1.0, 2.0]).unwrap();
        let r = V::from_f64(&[-3.0, 0.5]).unwrap();
        assert_eq!(lemma2_identity_check(&pc, &v, &v, &r), 0.0);
    }

    #[test]
    fn cc3_vanishes_at_reference() {
        let pc = mats(M::identity(2), M::identity(2), M::identity(2));
        let v = V::from_f64(&[1.0, 2.0]).unwrap();
        let cert = CertRecord {
            k: 0,
            r_k: 1.0,
            theta_k: 0.5,
            theta_next: 0.5,
            z_k: V::zeros(1),
            z_prime: V::zeros(1),
            sigma_used: 1.0,
            cc1_residual: None,
            cc3_slack: None,
        };
        let s = check_cc3(
            &cert,
            &pc,
            &pc.h0,
            Cc3Inputs {
                v_k: &v,
                v_next: &v,
                v_tilde: &v,
                v_ref: &v,
            },
        );
        assert_eq!(s, 0.0);
    }
}
