use std::path::Path;

use serde::{Deserialize, Serialize};

use super::oracle::BlockOracle;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::scalar::Scalar;

/// One block `f_i(x_i)` with its constraint matrix `A_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Block<T> {
    pub oracle: BlockOracle<T>,
    pub a: DenseMatrix<T>,
}

/// `min Σ f_i(x_i)  s.t.  Σ A_i x_i = b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawProblem<T>",
    into = "RawProblem<T>",
    bound = "T: Scalar"
)]
pub struct BlockProblem<T> {
    blocks: Vec<Block<T>>,
    b: DenseVector<T>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawProblem<T> {
    blocks: Vec<Block<T>>,
    b: DenseVector<T>,
}

impl<T: Scalar> TryFrom<RawProblem<T>> for BlockProblem<T> {
    type Error = Error;
    fn try_from(raw: RawProblem<T>) -> Result<Self> {
        BlockProblem::new(raw.blocks, raw.b)
    }
}

impl<T: Scalar> From<BlockProblem<T>> for RawProblem<T> {
    fn from(p: BlockProblem<T>) -> Self {
        RawProblem {
            blocks: p.blocks,
            b: p.b,
        }
    }
}

impl<T: Scalar> BlockProblem<T> {
    pub fn new(blocks: Vec<Block<T>>, b: DenseVector<T>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Spec("problem needs at least one block".into()));
        }
        for (i, blk) in blocks.iter().enumerate() {
            if blk.a.rows() != b.dim() {
                return Err(Error::Spec(format!(
                    "block {i}: A has {} rows but b has dimension {}",
                    blk.a.rows(),
                    b.dim()
                )));
            }
            if blk.a.cols() != blk.oracle.dim() {
                return Err(Error::Spec(format!(
                    "block {i}: A has {} columns but the objective has dimension {}",
                    blk.a.cols(),
                    blk.oracle.dim()
                )));
            }
        }
        Ok(Self { blocks, b })
    }

    pub fn blocks(&self) -> &[Block<T>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Block<T> {
        &self.blocks[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn b(&self) -> &DenseVector<T> {
        &self.b
    }

    /// Number of equality constraints `l`.
    pub fn constraints(&self) -> usize {
        self.b.dim()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.oracle.dim()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.block_dims().iter().sum()
    }

    /// `A = [A_1 … A_m]`.
    pub fn a_full(&self) -> DenseMatrix<T> {
        let parts: Vec<&DenseMatrix<T>> = self.blocks.iter().map(|b| &b.a).collect();
        DenseMatrix::hcat(&parts).expect("blocks share row count")
    }

    pub fn check_blocks(&self, x: &[DenseVector<T>]) -> Result<()> {
        if x.len() != self.blocks.len() {
            return Err(Error::Dimension {
                op: "block count",
                expected: self.blocks.len(),
                got: x.len(),
            });
        }
        for (blk, xi) in self.blocks.iter().zip(x) {
            if blk.oracle.dim() != xi.dim() {
                return Err(Error::Dimension {
                    op: "block dimension",
                    expected: blk.oracle.dim(),
                    got: xi.dim(),
                });
            }
        }
        Ok(())
    }

    /// `Σ f_i(x_i)`
    pub fn objective(&self, x: &[DenseVector<T>]) -> Result<T> {
        self.check_blocks(x)?;
        self.blocks
            .iter()
            .zip(x)
            .map(|(blk, xi)| blk.oracle.evaluate(xi))
            .sum()
    }

    /// `Σ A_i x_i − b`
    pub fn residual(&self, x: &[DenseVector<T>]) -> Result<DenseVector<T>> {
        self.check_blocks(x)?;
        let mut r = -&self.b;
        for (blk, xi) in self.blocks.iter().zip(x) {
            r.axpy(T::one(), &blk.a.apply(xi));
        }
        Ok(r)
    }

    pub fn split(&self, x: &DenseVector<T>) -> Result<Vec<DenseVector<T>>> {
        x.split(&self.block_dims())
    }

    pub fn zero_blocks(&self) -> Vec<DenseVector<T>> {
        self.block_dims()
            .into_iter()
            .map(DenseVector::zeros)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Certified primal-dual solution `(x*, λ*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SaddlePoint<T> {
    pub x_star: DenseVector<T>,
    pub lambda_star: DenseVector<T>,
    pub objective_star: T,
}

/// Residuals measured when certifying a candidate saddle point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleResiduals<T> {
    pub feasibility: T,
    pub stationarity: T,
}

impl<T: Scalar> SaddlePoint<T> {
    pub fn x_blocks(&self, problem: &BlockProblem<T>) -> Vec<DenseVector<T>> {
        problem
            .split(&self.x_star)
            .expect("saddle point matches problem")
    }

    /// Feasibility `‖Ax − b‖` and the largest per-block stationarity
    /// violation of `A_iᵀλ ∈ ∂f_i(x_i)`.
    pub fn residuals(&self, problem: &BlockProblem<T>) -> Result<SaddleResiduals<T>> {
        let xs = problem.split(&self.x_star)?;
        let feasibility = problem.residual(&xs)?.norm();
        let mut stationarity = T::zero();
        for (blk, xi) in problem.blocks().iter().zip(&xs) {
            let w = blk.a.apply_t(&self.lambda_star);
            stationarity = stationarity.max(blk.oracle.stationarity_residual(xi, &w)?);
        }
        Ok(SaddleResiduals {
            feasibility,
            stationarity,
        })
    }

    /// Checks `‖Ax* − b‖ ≤ 1e-9(1+‖b‖)` and stationarity ≤ 1e-8.
    pub fn certify(&self, problem: &BlockProblem<T>) -> Result<SaddleResiduals<T>> {
        let r = self.residuals(problem)?;
        let feas_tol = T::widened(1e-9) * (T::one() + problem.b().norm());
        let stat_tol = T::widened(1e-8);
        if r.feasibility > feas_tol || r.stationarity > stat_tol || !r.feasibility.is_finite() {
            return Err(Error::OracleFailure(format!(
                "certification failed: feasibility {:e}, stationarity {:e}",
                r.feasibility.to_f64_lossy(),
                r.stationarity.to_f64_lossy()
            )));
        }
        Ok(r)
    }
}
