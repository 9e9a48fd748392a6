//! Seeded synthetic instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::BlockOracle;
use super::problem::{Block, BlockProblem};
use crate::error::{Error, Result};
use crate::linalg::{extreme_eigenvalue, DenseMatrix, DenseVector, Extreme};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    /// One strongly convex quadratic block.
    P1Qp,
    /// Two strongly convex quadratic blocks.
    P2StronglyConvex,
    /// Quadratic `f₁`, diagonal quadratic plus ℓ1 `f₂`.
    P2LassoLike,
    /// Linear `f₁ = gᵀx₁`, strongly convex quadratic `f₂`.
    P2LinearFirst,
    /// `m ≥ 2` quadratic blocks; the last one has a declared Lipschitz
    /// gradient and a full-row-rank constraint matrix.
    P3Multiblock,
}

impl Template {
    pub fn default_dims(self) -> Vec<usize> {
        match self {
            Template::P1Qp => vec![50],
            Template::P2StronglyConvex | Template::P2LassoLike => vec![25, 25],
            Template::P2LinearFirst => vec![10, 25],
            Template::P3Multiblock => vec![10, 10, 25],
        }
    }
}

impl std::str::FromStr for Template {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Spec(format!("unknown template `{s}`")))
    }
}

fn default_l() -> usize {
    20
}

fn default_sigma() -> f64 {
    1.0
}

fn default_mu() -> f64 {
    1.0
}

/// Input to [`generate_instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub template: Template,
    /// Block sizes `n_i`; the template default when omitted.
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default = "default_l")]
    pub l: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Gradient Lipschitz constant. Required semantics for the last block of
    /// `p3-multiblock` (defaults to 10 there).
    #[serde(default, rename = "L", alias = "lipschitz")]
    pub lipschitz: Option<f64>,
    /// ℓ1 weight of the second block of `p2-lasso-like`.
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(template: Template, seed: u64) -> Self {
        Self {
            template,
            dims: None,
            l: default_l(),
            sigma: default_sigma(),
            lipschitz: None,
            mu: default_mu(),
            seed,
        }
    }

    pub fn with_dims(mut self, dims: Vec<usize>, l: usize) -> Self {
        self.dims = Some(dims);
        self.l = l;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn dims(&self) -> Vec<usize> {
        self.dims
            .clone()
            .unwrap_or_else(|| self.template.default_dims())
    }

    fn validate(&self) -> Result<()> {
        let dims = self.dims();
        let blocks_ok = match self.template {
            Template::P1Qp => dims.len() == 1,
            Template::P2StronglyConvex | Template::P2LassoLike | Template::P2LinearFirst => {
                dims.len() == 2
            }
            Template::P3Multiblock => dims.len() >= 2,
        };
        if !blocks_ok {
            return Err(Error::Spec(format!(
                "template {:?} cannot take {} blocks",
                self.template,
                dims.len()
            )));
        }
        if dims.contains(&0) || self.l == 0 {
            return Err(Error::Spec("dimensions must be positive".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Spec("sigma must be finite and >= 0".into()));
        }
        if let Some(l) = self.lipschitz {
            if !(l >= self.sigma) || !l.is_finite() || l <= 0.0 {
                return Err(Error::Spec(format!(
                    "L = {l} must be positive and at least sigma = {}",
                    self.sigma
                )));
            }
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Spec("mu must be >= 0".into()));
        }
        if self.template == Template::P3Multiblock && dims[dims.len() - 1] < self.l {
            return Err(Error::Spec(
                "last block needs at least l columns for a full-row-rank constraint matrix".into(),
            ));
        }
        if self.template == Template::P2LinearFirst && dims[0] > self.l {
            return Err(Error::Spec(
                "linear block needs n_1 <= l for a full-column-rank A_1".into(),
            ));
        }
        Ok(())
    }
}

const RANK_FLOOR: f64 = 1e-3;
const MAX_RANK_RETRIES: usize = 50;

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn uniform_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_raw(rows, cols, uniform_vec(rng, rows * cols))
}

/// `P = s·BᵀB + σI`; with `L` given, `s` is chosen so the top eigenvalue
/// is exactly `L`, otherwise `s = 1/n`.
fn quadratic_hessian(
    rng: &mut ChaCha8Rng,
    n: usize,
    sigma: f64,
    lipschitz: Option<f64>,
) -> Result<DenseMatrix<f64>> {
    let g = uniform_mat(rng, n, n).gram();
    let s = match lipschitz {
        Some(l) => {
            let top = extreme_eigenvalue(&g, Extreme::Max)?;
            if top > 0.0 {
                (l - sigma) / top
            } else {
                0.0
            }
        }
        None => 1.0 / n as f64,
    };
    Ok(g.scale(s).add_identity(sigma))
}

fn convert<T: Scalar>(m: &DenseMatrix<f64>) -> DenseMatrix<T> {
    DenseMatrix::from_raw(
        m.rows(),
        m.cols(),
        m.as_slice().iter().map(|&v| T::lit(v)).collect(),
    )
}

fn convert_vec<T: Scalar>(v: &[f64]) -> DenseVector<T> {
    DenseVector::from_vec(v.iter().map(|&x| T::lit(x)).collect())
}

fn quadratic_block<T: Scalar>(
    rng: &mut ChaCha8Rng,
    n: usize,
    sigma: f64,
    lipschitz: Option<f64>,
) -> Result<BlockOracle<T>> {
    let p = quadratic_hessian(rng, n, sigma, lipschitz)?;
    let q = uniform_vec(rng, n);
    BlockOracle::quadratic(
        convert(&p),
        convert_vec(&q),
        T::lit(sigma),
        lipschitz.map(T::lit),
    )
}

/// Deterministic instance for `spec`; the same spec always yields the same
/// problem.
pub fn generate_instance<T: Scalar>(spec: &InstanceSpec) -> Result<BlockProblem<T>> {
    spec.validate()?;
    let dims = spec.dims();
    let l = spec.l;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = dims.len();

    let mut oracles: Vec<BlockOracle<T>> = Vec::with_capacity(m);
    for (i, &n) in dims.iter().enumerate() {
        let oracle = match (spec.template, i) {
            (Template::P2LassoLike, 1) => {
                let p: Vec<f64> = (0..n)
                    .map(|_| spec.sigma + rng.gen_range(0.0..=1.0))
                    .collect();
                let q = uniform_vec(&mut rng, n);
                BlockOracle::quadratic_l1(
                    convert_vec(&p),
                    convert_vec(&q),
                    T::lit(spec.mu),
                    T::lit(spec.sigma),
                )?
            }
            (Template::P2LinearFirst, 0) => {
                BlockOracle::linear(convert_vec(&uniform_vec(&mut rng, n)))?
            }
            (Template::P3Multiblock, i) if i == m - 1 => quadratic_block(
                &mut rng,
                n,
                spec.sigma,
                Some(spec.lipschitz.unwrap_or(10.0)),
            )?,
            _ => quadratic_block(&mut rng, n, spec.sigma, spec.lipschitz)?,
        };
        oracles.push(oracle);
    }

    let mut mats = Vec::with_capacity(m);
    for (i, &n) in dims.iter().enumerate() {
        let needs_rank = match spec.template {
            Template::P3Multiblock => i == m - 1,
            Template::P2LinearFirst => i == 0,
            _ => false,
        };
        let mut a = uniform_mat(&mut rng, l, n);
        if needs_rank {
            let mut tries = 0;
            loop {
                let g = if n >= l { a.outer_gram() } else { a.gram() };
                if extreme_eigenvalue(&g, Extreme::Min)? >= RANK_FLOOR {
                    break;
                }
                tries += 1;
                if tries >= MAX_RANK_RETRIES {
                    return Err(Error::Rank(format!(
                        "block {i}: could not draw a well-conditioned A"
                    )));
                }
                a = uniform_mat(&mut rng, l, n);
            }
        }
        mats.push(a);
    }

    let mut b = vec![0.0; l];
    for (a, &n) in mats.iter().zip(&dims) {
        let x = DenseVector::from_vec(uniform_vec(&mut rng, n));
        for (bi, v) in b.iter_mut().zip(a.apply(&x).iter()) {
            *bi += v;
        }
    }

    let blocks = oracles
        .into_iter()
        .zip(&mats)
        .map(|(oracle, a)| Block {
            oracle,
            a: convert(a),
        })
        .collect();
    BlockProblem::new(blocks, convert_vec(&b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_problem() {
        let spec = InstanceSpec::new(Template::P2StronglyConvex, 7);
        let a: BlockProblem<f64> = generate_instance(&spec).unwrap();
        let b: BlockProblem<f64> = generate_instance(&spec).unwrap();
        assert_eq!(a, b);
        let c: BlockProblem<f64> =
            generate_instance(&InstanceSpec::new(Template::P2StronglyConvex, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn p1_strong_convexity_holds() {
        let p: BlockProblem<f64> =
            generate_instance(&InstanceSpec::new(Template::P1Qp, 1)).unwrap();
        let h = p.block(0).oracle.hessian();
        assert!(extreme_eigenvalue(&h, Extreme::Min).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn lipschitz_sets_top_eigenvalue() {
        let spec = InstanceSpec::new(Template::P1Qp, 3).with_lipschitz(5.0);
        let p: BlockProblem<f64> = generate_instance(&spec).unwrap();
        let top = extreme_eigenvalue(&p.block(0).oracle.hessian(), Extreme::Max).unwrap();
        assert!((top - 5.0).abs() < 1e-9);
    }

    #[test]
    fn multiblock_last_block_full_row_rank() {
        let p: BlockProblem<f64> =
            generate_instance(&InstanceSpec::new(Template::P3Multiblock, 2)).unwrap();
        assert_eq!(p.num_blocks(), 3);
        let am = &p.block(2).a;
        assert!(extreme_eigenvalue(&am.outer_gram(), Extreme::Min).unwrap() > 0.0);
        assert_eq!(p.block(2).oracle.grad_lipschitz(), Some(10.0));
    }

    #[test]
    fn inconsistent_specs_rejected() {
        let spec = InstanceSpec::new(Template::P1Qp, 0)
            .with_sigma(2.0)
            .with_lipschitz(1.0);
        assert!(matches!(
            generate_instance::<f64>(&spec),
            Err(Error::Spec(_))
        ));
        let spec = InstanceSpec::new(Template::P1Qp, 0).with_dims(vec![3, 3], 2);
        assert!(matches!(
            generate_instance::<f64>(&spec),
            Err(Error::Spec(_))
        ));
    }

    #[test]
    fn template_names_parse() {
        assert_eq!(
            "p2-lasso-like".parse::<Template>().unwrap(),
            Template::P2LassoLike
        );
        assert!("p9".parse::<Template>().is_err());
    }

    #[test]
    fn feasible_by_construction() {
        for t in [
            Template::P1Qp,
            Template::P2LassoLike,
            Template::P2LinearFirst,
            Template::P3Multiblock,
        ] {
            let p: BlockProblem<f64> = generate_instance(&InstanceSpec::new(t, 11)).unwrap();
            assert_eq!(p.constraints(), 20);
            assert!(p.b().is_finite());
        }
    }
}
