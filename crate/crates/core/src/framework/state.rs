use serde::{Deserialize, Serialize};

use crate::linalg::DenseVector;
use crate::scalar::Scalar;

/// Primal-dual iterate `u^k = (x^k, λ^k)` together with the method's
/// correction-space coordinates `v^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IterateState<T> {
    pub x_blocks: Vec<DenseVector<T>>,
    pub lambda: DenseVector<T>,
    pub v: DenseVector<T>,
    pub iteration: usize,
    /// `x^{k−1}`, kept for methods whose certificates look one step back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<Vec<DenseVector<T>>>,
}

impl<T: Scalar> IterateState<T> {
    pub fn x(&self) -> DenseVector<T> {
        DenseVector::concat(self.x_blocks.iter())
    }
}

/// Predicted point `ũ^k = (x̃^k, λ̃^k)` and its `ṽ^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Prediction<T> {
    pub x_tilde_blocks: Vec<DenseVector<T>>,
    pub lambda_tilde: DenseVector<T>,
    pub v_tilde: DenseVector<T>,
}

impl<T: Scalar> Prediction<T> {
    pub fn x_tilde(&self) -> DenseVector<T> {
        DenseVector::concat(self.x_tilde_blocks.iter())
    }
}
