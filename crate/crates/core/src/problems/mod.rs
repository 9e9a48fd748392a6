//! Problem models, synthetic instances and the reference saddle-point oracle.

mod generate;
mod kkt;
mod oracle;
mod problem;

pub use generate::{generate_instance, InstanceSpec, Template};
pub use kkt::kkt_oracle;
pub use oracle::{evaluate, prox_subproblem, subproblem_residual, BlockOracle, Metric, OracleKind};
pub use problem::{Block, BlockProblem, SaddlePoint, SaddleResiduals};
