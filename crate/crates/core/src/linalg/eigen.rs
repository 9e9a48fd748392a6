//! Symmetric eigenvalue routines (cyclic Jacobi).

use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use super::factor::Cholesky;
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extreme {
    Max,
    Min,
}

const MAX_SWEEPS: usize = 100;

/// All eigenvalues of a symmetric matrix, ascending.
///
/// The input is symmetrized as `(a + aᵀ)/2` after the symmetry check.
pub fn symmetric_eigenvalues<T: Scalar>(a: &DenseMatrix<T>) -> Result<Vec<T>> {
    a.check_symmetric()?;
    let n = a.rows();
    let mut m = a.symmetrized();
    let scale = m.frobenius_norm();
    if n == 0 {
        return Ok(Vec::new());
    }
    if scale == T::zero() {
        return Ok(vec![T::zero(); n]);
    }
    let two = T::lit(2.0);
    let stop = T::epsilon() * scale;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig = m.diag();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eig)
}

/// Largest or smallest eigenvalue of a symmetric matrix.
pub fn extreme_eigenvalue<T: Scalar>(a: &DenseMatrix<T>, which: Extreme) -> Result<T> {
    let eig = symmetric_eigenvalues(a)?;
    Ok(match which {
        Extreme::Max => eig.last().copied().unwrap_or_else(T::zero),
        Extreme::Min => eig.first().copied().unwrap_or_else(T::zero),
    })
}

/// True iff `σ_min(a) ≥ −tol`, up to a rounding allowance proportional to
/// `n · eps · max|a|`.
pub fn is_psd<T: Scalar>(a: &DenseMatrix<T>, tol: T) -> Result<bool> {
    a.check_symmetric()?;
    let n = a.rows();
    let slack = T::epsilon() * T::lit(4.0 * (n.max(1) as f64)) * a.max_abs();
    // fast path: a + tol I positive definite
    if tol > T::zero() && Cholesky::factor(&a.symmetrized().add_identity(tol)).is_ok() {
        return Ok(true);
    }
    Ok(extreme_eigenvalue(a, Extreme::Min)? >= -(tol + slack))
}

/// Squared spectral norm `‖a‖² = σ_max(aᵀa)`.
pub fn spectral_norm_sq<T: Scalar>(a: &DenseMatrix<T>) -> Result<T> {
    let g = if a.rows() < a.cols() {
        a.outer_gram()
    } else {
        a.gram()
    };
    extreme_eigenvalue(&g, Extreme::Max)
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    #[test]
    fn diagonal_and_hand_cases() {
        let d = M::from_diag(&[1.0, 3.0]);
        assert_eq!(extreme_eigenvalue(&d, Extreme::Max).unwrap(), 3.0);
        assert_eq!(extreme_eigenvalue(&d, Extreme::Min).unwrap(), 1.0);
        // characteristic polynomial (2-x)^2 - 1 has roots 1 and 3
        let a = M::from_f64(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        assert!((extreme_eigenvalue(&a, Extreme::Max).unwrap() - 3.0).abs() < 1e-14);
        assert!((extreme_eigenvalue(&a, Extreme::Min).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_symmetric() {
        let a = M::from_f64(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(extreme_eigenvalue(&a, Extreme::Max).is_err());
        assert!(is_psd(&a, 0.0).is_err());
    }

    #[test]
    fn psd_cases() {
        assert!(is_psd(&M::identity(2), 0.0).unwrap());
        assert!(!is_psd(&M::from_diag(&[1.0, -1.0]), 1e-9).unwrap());
        let a = M::from_f64(&[&[1.0, 2.0]]).unwrap();
        assert!(is_psd(&a.gram(), 0.0).unwrap());
    }

    #[test]
    fn spectral_norm_of_row_vector() {
        let a = M::from_f64(&[&[3.0, 4.0]]).unwrap();
        assert!((spectral_norm_sq(&a).unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_sum_to_trace() {
        let a = M::from_f64(&[&[4.0, 1.0, -2.0], &[1.0, 3.0, 0.5], &[-2.0, 0.5, 1.0]]).unwrap();
        let e = symmetric_eigenvalues(&a).unwrap();
        let s: f64 = e.iter().sum();
        assert!((s - 8.0).abs() < 1e-13);
        let prod: f64 = e.iter().product();
        // det by cofactor expansion
        let det = 4.0 * (3.0 - 0.25) - 1.0 * (1.0 + 1.0) + (-2.0) * (0.5 + 6.0);
        assert!((prod - det).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let a = DenseMatrix::<f32>::from_f64(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let top = extreme_eigenvalue(&a, Extreme::Max).unwrap();
        assert!((top - 3.0).abs() < 1e-5);
    }
}
