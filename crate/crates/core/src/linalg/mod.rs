//! Dense kernels sized for desk-scale problems.

mod dense;
mod eigen;
mod factor;

pub use dense::{DenseMatrix, DenseVector};
pub use eigen::{extreme_eigenvalue, is_psd, spectral_norm_sq, symmetric_eigenvalues, Extreme};
pub use factor::{lu_solve, solve_linear, solve_triangular, Cholesky, Side};
