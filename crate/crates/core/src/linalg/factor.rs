//! Direct factorizations: Cholesky for SPD systems, triangular substitution,
//! and partial-pivoting LU for the indefinite KKT systems.

use serde::{Deserialize, Serialize};

use super::dense::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which triangle of the matrix holds the nonzeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: DenseMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// is read.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape {
                op: "cholesky",
                left_rows: a.rows(),
                left_cols: a.cols(),
                right_rows: a.cols(),
                right_cols: a.rows(),
            });
        }
        let n = a.rows();
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: d.to_f64_lossy(),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor_l(&self) -> &DenseMatrix<T> {
        &self.l
    }

    pub fn solve(&self, rhs: &DenseVector<T>) -> Result<DenseVector<T>> {
        let n = self.dim();
        if rhs.dim() != n {
            return Err(Error::Dimension {
                op: "cholesky solve",
                expected: n,
                got: rhs.dim(),
            });
        }
        let mut y = rhs.as_slice().to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        Ok(DenseVector::from_vec(y))
    }
}

/// Solves `a y = rhs` for symmetric positive definite `a`.
pub fn solve_linear<T: Scalar>(a: &DenseMatrix<T>, rhs: &DenseVector<T>) -> Result<DenseVector<T>> {
    a.check_symmetric()?;
    Cholesky::factor(a)?.solve(rhs)
}

/// Forward or back substitution against a triangular matrix.
pub fn solve_triangular<T: Scalar>(
    t: &DenseMatrix<T>,
    rhs: &DenseVector<T>,
    side: Side,
) -> Result<DenseVector<T>> {
    if !t.is_square() {
        return Err(Error::Shape {
            op: "solve_triangular",
            left_rows: t.rows(),
            left_cols: t.cols(),
            right_rows: rhs.dim(),
            right_cols: 1,
        });
    }
    let n = t.rows();
    if rhs.dim() != n {
        return Err(Error::Dimension {
            op: "solve_triangular",
            expected: n,
            got: rhs.dim(),
        });
    }
    if let Some(i) = (0..n).find(|&i| t[(i, i)] == T::zero()) {
        return Err(Error::Singular(i));
    }
    let mut y = rhs.as_slice().to_vec();
    match side {
        Side::Lower => {
            for i in 0..n {
                let mut s = y[i];
                for (k, &yk) in y.iter().enumerate().take(i) {
                    s -= t[(i, k)] * yk;
                }
                y[i] = s / t[(i, i)];
            }
        }
        Side::Upper => {
            for i in (0..n).rev() {
                let mut s = y[i];
                for (k, &yk) in y.iter().enumerate().skip(i + 1) {
                    s -= t[(i, k)] * yk;
                }
                y[i] = s / t[(i, i)];
            }
        }
    }
    Ok(DenseVector::from_vec(y))
}

/// Solves a general square system by LU with partial pivoting.
///
/// A pivot below `1e-13 · max|a|` (or the type's precision floor) is
/// reported as singular.
pub fn lu_solve<T: Scalar>(a: &DenseMatrix<T>, rhs: &DenseVector<T>) -> Result<DenseVector<T>> {
    if !a.is_square() {
        return Err(Error::Shape {
            op: "lu_solve",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: rhs.dim(),
            right_cols: 1,
        });
    }
    let n = a.rows();
    if rhs.dim() != n {
        return Err(Error::Dimension {
            op: "lu_solve",
            expected: n,
            got: rhs.dim(),
        });
    }
    let mut m = a.clone();
    let mut b = rhs.as_slice().to_vec();
    let floor = a.max_abs() * T::lit(1e-13).max(T::epsilon() * T::lit(16.0));
    for col in 0..n {
        let (piv, pval) =
            (col..n)
                .map(|r| (r, m[(r, col)].abs()))
                .fold(
                    (col, T::zero()),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pval <= floor || pval == T::zero() {
            return Err(Error::Singular(col));
        }
        if piv != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            b.swap(col, piv);
        }
        let d = m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / d;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(r, j)] -= f * v;
            }
            let bc = b[col];
            b[r] -= f * bc;
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= m[(i, k)] * b[k];
        }
        b[i] = s / m[(i, i)];
    }
    Ok(DenseVector::from_vec(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;
    type V = DenseVector<f64>;

    #[test]
    fn solve_linear_identity_diagonal_and_hand_case() {
        let v = V::from_f64(&[1.0, -2.0, 3.5]).unwrap();
        assert_eq!(solve_linear(&M::identity(3), &v).unwrap(), v);

        let d = M::from_f64(&[&[2.0, 0.0], &[0.0, 4.0]]).unwrap();
        let y = solve_linear(&d, &V::from_f64(&[2.0, 4.0]).unwrap()).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);

        // back-substitution: 4/11 + 7/11 = 1, 1/11 + 21/11 = 2
        let a = M::from_f64(&[&[4.0, 1.0], &[1.0, 3.0]]).unwrap();
        let y = solve_linear(&a, &V::from_f64(&[1.0, 2.0]).unwrap()).unwrap();
        assert!((y[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((y[1] - 7.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn solve_linear_reports_failing_pivot() {
        let a = M::from_f64(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        match solve_linear(&a, &V::zeros(2)) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_linear_rejects_asymmetric() {
        let a = M::from_f64(&[&[2.0, 1.0], &[0.0, 2.0]]).unwrap();
        assert!(matches!(
            solve_linear(&a, &V::zeros(2)),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn triangular_hand_cases() {
        let v = V::from_f64(&[3.0, 4.0]).unwrap();
        assert_eq!(
            solve_triangular(&M::identity(2), &v, Side::Lower).unwrap(),
            v
        );
        let lo = M::from_f64(&[&[1.0, 0.0], &[1.0, 1.0]]).unwrap();
        let y = solve_triangular(&lo, &V::from_f64(&[1.0, 2.0]).unwrap(), Side::Lower).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 1.0]);
        let up = M::from_f64(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let y = solve_triangular(&up, &V::from_f64(&[2.0, 1.0]).unwrap(), Side::Upper).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn triangular_zero_diagonal_is_singular() {
        let t = M::from_f64(&[&[1.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert!(matches!(
            solve_triangular(&t, &V::zeros(2), Side::Lower),
            Err(Error::Singular(1))
        ));
    }

    #[test]
    fn lu_solves_indefinite_and_flags_singular() {
        let a = M::from_f64(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let y = lu_solve(&a, &V::from_f64(&[2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 2.0]);
        let s = M::from_f64(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(
            lu_solve(&s, &V::zeros(2)),
            Err(Error::Singular(_))
        ));
    }
}
