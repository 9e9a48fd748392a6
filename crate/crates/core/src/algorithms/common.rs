use crate::error::Result;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problems::{prox_subproblem, subproblem_residual, BlockOracle, Metric};
use crate::scalar::Scalar;

/// Exact subproblem solve plus its first-order residual.
pub(crate) fn solve_block<T: Scalar>(
    oracle: &BlockOracle<T>,
    metric: &Metric<T>,
    linear: &DenseVector<T>,
) -> Result<(DenseVector<T>, T)> {
    let x = prox_subproblem(oracle, metric, linear)?;
    let res = subproblem_residual(oracle, metric, linear, &x)?;
    Ok((x, res))
}

pub(crate) fn stack<T: Scalar>(parts: &[&DenseVector<T>]) -> DenseVector<T> {
    DenseVector::concat(parts.iter().copied())
}

/// `[[a, b], [c, d]]` from four blocks with compatible shapes.
pub(crate) fn block2<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
    d: &DenseMatrix<T>,
) -> DenseMatrix<T> {
    let mut out = DenseMatrix::zeros(a.rows() + c.rows(), a.cols() + b.cols());
    out.set_block(0, 0, a);
    out.set_block(0, a.cols(), b);
    out.set_block(a.rows(), 0, c);
    out.set_block(a.rows(), a.cols(), d);
    out
}

/// `β Aᵀ(r)`, with `r` a constraint-space vector.
pub(crate) fn scaled_at<T: Scalar>(
    a: &DenseMatrix<T>,
    beta: T,
    r: &DenseVector<T>,
) -> DenseVector<T> {
    a.apply_t(r).scale(beta)
}
