//! Concrete prediction-correction methods.

mod admm;
mod common;
mod config;
mod gpalm;
mod ladmm;
mod multiblock;
mod padmm;

pub use admm::Admm;
pub use config::{BetaScaling, MethodConfig, MethodKind, ProximalKind, R_PROX_MARGIN};
pub use gpalm::Gpalm;
pub use ladmm::Ladmm;
pub use multiblock::Multiblock;
pub use padmm::Padmm;

use crate::error::Result;
use crate::framework::PcMethod;
use crate::problems::BlockProblem;
use crate::scalar::Scalar;

/// Builds the method named by `cfg` for `problem`.
pub fn build_method<T: Scalar>(
    problem: &BlockProblem<T>,
    cfg: &MethodConfig<T>,
) -> Result<Box<dyn PcMethod<T>>> {
    let p = problem.clone();
    Ok(match cfg.method {
        MethodKind::Gpalm => Box::new(Gpalm::new(p, cfg)?),
        MethodKind::Admm => Box::new(Admm::new(p, cfg)?),
        MethodKind::Ladmm => Box::new(Ladmm::new(p, cfg)?),
        MethodKind::Multiblock => Box::new(Multiblock::new(p, cfg)?),
        MethodKind::Padmm => Box::new(Padmm::new(p, cfg)?),
    })
}
