use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::problems::{BlockProblem, SaddlePoint};
use crate::scalar::{CompensatedSum, Scalar};

/// `F(u) = ((−A_iᵀλ)_i, Ax − b)`.
#[allow(non_snake_case)]
pub fn residual_F<T: Scalar>(
    problem: &BlockProblem<T>,
    x_blocks: &[DenseVector<T>],
    lambda: &DenseVector<T>,
) -> Result<DenseVector<T>> {
    if lambda.dim() != problem.constraints() {
        return Err(Error::Dimension {
            op: "residual_F",
            expected: problem.constraints(),
            got: lambda.dim(),
        });
    }
    let resid = problem.residual(x_blocks)?;
    let mut parts: Vec<DenseVector<T>> = problem
        .blocks()
        .iter()
        .map(|b| -&b.a.apply_t(lambda))
        .collect();
    parts.push(resid);
    Ok(DenseVector::concat(parts.iter()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapMetrics<T> {
    /// `f(x) − f(x*) − λ*ᵀ(Ax − b)`
    pub lagrangian_gap: T,
    /// `‖Ax − b‖`
    pub feasibility: T,
    /// `|f(x) − f(x*)|`
    pub objective_gap: T,
}

/// Gap metrics of `x_eval` against a certified saddle point.
pub fn gap_metrics<T: Scalar>(
    problem: &BlockProblem<T>,
    x_eval: &DenseVector<T>,
    saddle: &SaddlePoint<T>,
) -> Result<GapMetrics<T>> {
    let xs = problem.split(x_eval)?;
    let f = problem.objective(&xs)?;
    let r = problem.residual(&xs)?;
    let df = f - saddle.objective_star;
    Ok(GapMetrics {
        lagrangian_gap: df - saddle.lambda_star.dot(&r),
        feasibility: r.norm(),
        objective_gap: df.abs(),
    })
}

/// Weighted running average `X̃ = Σ r^k x̃^k / Σ r^k` with compensated
/// accumulation of both numerator and denominator.
#[derive(Debug, Clone)]
pub struct ErgodicAverage<T> {
    numerator: Vec<CompensatedSum<T>>,
    weight: CompensatedSum<T>,
}

impl<T: Scalar> ErgodicAverage<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            numerator: vec![CompensatedSum::new(); dim],
            weight: CompensatedSum::new(),
        }
    }

    pub fn push(&mut self, x: &DenseVector<T>, r: T) -> Result<()> {
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::Weight(r.to_f64_lossy()));
        }
        if x.dim() != self.numerator.len() {
            return Err(Error::Dimension {
                op: "ergodic average",
                expected: self.numerator.len(),
                got: x.dim(),
            });
        }
        for (acc, &xi) in self.numerator.iter_mut().zip(x.iter()) {
            acc.add(r * xi);
        }
        self.weight.add(r);
        Ok(())
    }

    pub fn weight_sum(&self) -> T {
        self.weight.value()
    }

    /// Current average; the zero vector before any push.
    pub fn mean(&self) -> DenseVector<T> {
        let w = self.weight.value();
        if w == T::zero() {
            return DenseVector::zeros(self.numerator.len());
        }
        DenseVector::from_vec(self.numerator.iter().map(|s| s.value() / w).collect())
    }
}
