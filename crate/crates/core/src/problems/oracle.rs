use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{extreme_eigenvalue, Cholesky, DenseMatrix, DenseVector, Extreme};
use crate::scalar::Scalar;

/// Closed-form-friendly objective families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Scalar")]
pub enum OracleKind<T> {
    /// `½ xᵀ P x + qᵀ x`
    Quadratic {
        p: DenseMatrix<T>,
        q: DenseVector<T>,
    },
    /// `½ xᵀ diag(p) x + qᵀ x + mu ‖x‖₁`
    QuadraticL1 {
        p_diag: DenseVector<T>,
        q: DenseVector<T>,
        mu: T,
    },
    /// `gᵀ x`
    Linear { g: DenseVector<T> },
}

/// One separable block of the objective together with its declared
/// strong-convexity modulus and (optional) gradient Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOracle<T>", into = "RawOracle<T>", bound = "T: Scalar")]
pub struct BlockOracle<T> {
    kind: OracleKind<T>,
    strong_convexity: T,
    grad_lipschitz: Option<T>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawOracle<T> {
    #[serde(flatten)]
    kind: OracleKind<T>,
    strong_convexity: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grad_lipschitz: Option<T>,
}

impl<T: Scalar> TryFrom<RawOracle<T>> for BlockOracle<T> {
    type Error = Error;
    fn try_from(raw: RawOracle<T>) -> Result<Self> {
        BlockOracle::new(raw.kind, raw.strong_convexity, raw.grad_lipschitz)
    }
}

impl<T: Scalar> From<BlockOracle<T>> for RawOracle<T> {
    fn from(o: BlockOracle<T>) -> Self {
        RawOracle {
            kind: o.kind,
            strong_convexity: o.strong_convexity,
            grad_lipschitz: o.grad_lipschitz,
        }
    }
}

/// Quadratic metric of a proximal subproblem `½ xᵀ M x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric<T> {
    Matrix(DenseMatrix<T>),
    ScaledIdentity(T),
    Diagonal(Vec<T>),
}

impl<T: Scalar> Metric<T> {
    pub fn apply(&self, x: &DenseVector<T>) -> DenseVector<T> {
        match self {
            Metric::Matrix(m) => m.apply(x),
            Metric::ScaledIdentity(t) => x.scale(*t),
            Metric::Diagonal(d) => {
                DenseVector::from_vec(x.iter().zip(d).map(|(&v, &w)| v * w).collect())
            }
        }
    }

    pub fn to_dense(&self, n: usize) -> DenseMatrix<T> {
        match self {
            Metric::Matrix(m) => m.clone(),
            Metric::ScaledIdentity(t) => DenseMatrix::scaled_identity(n, *t),
            Metric::Diagonal(d) => DenseMatrix::from_diag(d),
        }
    }

    /// Diagonal entries if the metric is diagonal, `None` otherwise.
    fn diagonal(&self, n: usize) -> Option<Vec<T>> {
        match self {
            Metric::ScaledIdentity(t) => Some(vec![*t; n]),
            Metric::Diagonal(d) => Some(d.clone()),
            Metric::Matrix(m) => {
                let off = (0..m.rows())
                    .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
                    .any(|(i, j)| i != j && m[(i, j)] != T::zero());
                (!off).then(|| m.diag())
            }
        }
    }
}

fn tol_le<T: Scalar>(a: T, b: T) -> bool {
    a <= b + T::lit(1e-9) * b.abs().max(T::one())
}

impl<T: Scalar> BlockOracle<T> {
    /// Validates the declared moduli against the data.
    pub fn new(
        kind: OracleKind<T>,
        strong_convexity: T,
        grad_lipschitz: Option<T>,
    ) -> Result<Self> {
        if !(strong_convexity >= T::zero()) || !strong_convexity.is_finite() {
            return Err(Error::Spec(
                "strong convexity modulus must be finite and >= 0".into(),
            ));
        }
        if let Some(l) = grad_lipschitz {
            if !(l > T::zero()) || !l.is_finite() {
                return Err(Error::Spec(
                    "gradient Lipschitz constant must be finite and > 0".into(),
                ));
            }
        }
        match &kind {
            OracleKind::Quadratic { p, q } => {
                if !p.is_square() || p.rows() != q.dim() {
                    return Err(Error::Dimension {
                        op: "quadratic oracle",
                        expected: q.dim(),
                        got: p.rows(),
                    });
                }
                p.check_symmetric()?;
                let lo = extreme_eigenvalue(p, Extreme::Min)?;
                if !tol_le(T::zero(), lo) {
                    return Err(Error::Spec(format!(
                        "quadratic term not PSD (min eigenvalue {lo})"
                    )));
                }
                if !tol_le(strong_convexity, lo) {
                    return Err(Error::Spec(format!(
                        "declared strong convexity {strong_convexity} exceeds min eigenvalue {lo}"
                    )));
                }
                if let Some(l) = grad_lipschitz {
                    let hi = extreme_eigenvalue(p, Extreme::Max)?;
                    if !tol_le(hi, l) {
                        return Err(Error::Spec(format!(
                            "declared Lipschitz constant {l} below max eigenvalue {hi}"
                        )));
                    }
                }
            }
            OracleKind::QuadraticL1 { p_diag, q, mu } => {
                if p_diag.dim() != q.dim() {
                    return Err(Error::Dimension {
                        op: "l1 oracle",
                        expected: q.dim(),
                        got: p_diag.dim(),
                    });
                }
                if !(*mu >= T::zero()) {
                    return Err(Error::Spec("l1 weight must be >= 0".into()));
                }
                let lo = p_diag.iter().fold(T::infinity(), |m, &v| m.min(v));
                let lo = if p_diag.is_empty() { T::zero() } else { lo };
                if !tol_le(T::zero(), lo) || !tol_le(strong_convexity, lo) {
                    return Err(Error::Spec(format!(
                        "diagonal quadratic min {lo} incompatible with strong convexity {strong_convexity}"
                    )));
                }
                if let Some(l) = grad_lipschitz {
                    if *mu > T::zero() {
                        return Err(Error::Spec(
                            "non-differentiable block cannot declare a Lipschitz gradient".into(),
                        ));
                    }
                    if !tol_le(p_diag.max_abs(), l) {
                        return Err(Error::Spec(
                            "declared Lipschitz constant below max diagonal".into(),
                        ));
                    }
                }
            }
            OracleKind::Linear { .. } => {
                if strong_convexity != T::zero() {
                    return Err(Error::Spec("linear block has zero strong convexity".into()));
                }
            }
        }
        Ok(Self {
            kind,
            strong_convexity,
            grad_lipschitz,
        })
    }

    pub fn quadratic(
        p: DenseMatrix<T>,
        q: DenseVector<T>,
        sigma: T,
        lipschitz: Option<T>,
    ) -> Result<Self> {
        Self::new(OracleKind::Quadratic { p, q }, sigma, lipschitz)
    }

    pub fn quadratic_l1(
        p_diag: DenseVector<T>,
        q: DenseVector<T>,
        mu: T,
        sigma: T,
    ) -> Result<Self> {
        Self::new(OracleKind::QuadraticL1 { p_diag, q, mu }, sigma, None)
    }

    pub fn linear(g: DenseVector<T>) -> Result<Self> {
        Self::new(OracleKind::Linear { g }, T::zero(), None)
    }

    pub fn kind(&self) -> &OracleKind<T> {
        &self.kind
    }

    pub fn strong_convexity(&self) -> T {
        self.strong_convexity
    }

    pub fn grad_lipschitz(&self) -> Option<T> {
        self.grad_lipschitz
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            OracleKind::Quadratic { q, .. } | OracleKind::QuadraticL1 { q, .. } => q.dim(),
            OracleKind::Linear { g } => g.dim(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, OracleKind::Linear { .. })
    }

    pub fn l1_weight(&self) -> T {
        match &self.kind {
            OracleKind::QuadraticL1 { mu, .. } => *mu,
            _ => T::zero(),
        }
    }

    pub fn is_differentiable(&self) -> bool {
        self.l1_weight() == T::zero()
    }

    /// Dense Hessian of the smooth part.
    pub fn hessian(&self) -> DenseMatrix<T> {
        match &self.kind {
            OracleKind::Quadratic { p, .. } => p.clone(),
            OracleKind::QuadraticL1 { p_diag, .. } => DenseMatrix::from_diag(p_diag.as_slice()),
            OracleKind::Linear { g } => DenseMatrix::zeros(g.dim(), g.dim()),
        }
    }

    /// Linear coefficient of the smooth part (`q` or `g`).
    pub fn linear_coeff(&self) -> &DenseVector<T> {
        match &self.kind {
            OracleKind::Quadratic { q, .. } | OracleKind::QuadraticL1 { q, .. } => q,
            OracleKind::Linear { g } => g,
        }
    }

    fn check_dim(&self, x: &DenseVector<T>, op: &'static str) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension {
                op,
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &DenseVector<T>) -> Result<T> {
        self.check_dim(x, "evaluate")?;
        let half = T::lit(0.5);
        Ok(match &self.kind {
            OracleKind::Quadratic { p, q } => half * p.quad_form(x) + q.dot(x),
            OracleKind::QuadraticL1 { p_diag, q, mu } => {
                let quad: T = x.iter().zip(p_diag.iter()).map(|(&v, &d)| d * v * v).sum();
                half * quad + q.dot(x) + *mu * x.norm_l1()
            }
            OracleKind::Linear { g } => g.dot(x),
        })
    }

    /// Gradient of the smooth part (the ℓ1 term excluded).
    pub fn smooth_gradient(&self, x: &DenseVector<T>) -> Result<DenseVector<T>> {
        self.check_dim(x, "gradient")?;
        Ok(match &self.kind {
            OracleKind::Quadratic { p, q } => &p.apply(x) + q,
            OracleKind::QuadraticL1 { p_diag, q, .. } => DenseVector::from_vec(
                x.iter()
                    .zip(p_diag.iter())
                    .zip(q.iter())
                    .map(|((&v, &d), &c)| d * v + c)
                    .collect(),
            ),
            OracleKind::Linear { g } => g.clone(),
        })
    }

    /// Gradient; errors for a block carrying an active ℓ1 term.
    pub fn gradient(&self, x: &DenseVector<T>) -> Result<DenseVector<T>> {
        if !self.is_differentiable() {
            return Err(Error::Unsupported("gradient of an l1-bearing block".into()));
        }
        self.smooth_gradient(x)
    }

    /// Largest violation of `0 ∈ ∂f(x) − w` measured componentwise, where
    /// `w` is the "dual" direction the subgradient must match.
    pub fn stationarity_residual(&self, x: &DenseVector<T>, w: &DenseVector<T>) -> Result<T> {
        let g = &self.smooth_gradient(x)? - w;
        let mu = self.l1_weight();
        if mu == T::zero() {
            return Ok(g.norm());
        }
        Ok(l1_inclusion_residual(&g, x, mu))
    }
}

/// Componentwise distance of `-g` from `mu ∂‖x‖₁`.
pub(crate) fn l1_inclusion_residual<T: Scalar>(g: &DenseVector<T>, x: &DenseVector<T>, mu: T) -> T {
    g.iter()
        .zip(x.iter())
        .map(|(&gj, &xj)| {
            if xj > T::zero() {
                (gj + mu).abs()
            } else if xj < T::zero() {
                (gj - mu).abs()
            } else {
                (gj.abs() - mu).max(T::zero())
            }
        })
        .fold(T::zero(), T::max)
}

/// Objective value of a block.
pub fn evaluate<T: Scalar>(oracle: &BlockOracle<T>, x: &DenseVector<T>) -> Result<T> {
    oracle.evaluate(x)
}

fn soft_threshold<T: Scalar>(c: T, kappa: T) -> T {
    if c > kappa {
        c - kappa
    } else if c < -kappa {
        c + kappa
    } else {
        T::zero()
    }
}

/// Exact minimizer of `f(x) + linear_termᵀ x + ½ xᵀ M x`.
pub fn prox_subproblem<T: Scalar>(
    oracle: &BlockOracle<T>,
    metric: &Metric<T>,
    linear_term: &DenseVector<T>,
) -> Result<DenseVector<T>> {
    let n = oracle.dim();
    if linear_term.dim() != n {
        return Err(Error::Dimension {
            op: "prox_subproblem",
            expected: n,
            got: linear_term.dim(),
        });
    }
    let rhs = -&(oracle.linear_coeff() + linear_term);
    match &oracle.kind {
        OracleKind::Quadratic { p, .. } => {
            let system = match metric {
                Metric::ScaledIdentity(t) => p.add_identity(*t),
                other => p + &other.to_dense(n),
            };
            Cholesky::factor(&system)?.solve(&rhs)
        }
        OracleKind::Linear { .. } => match metric.diagonal(n) {
            Some(d) => divide_diag(&rhs, &d),
            None => Cholesky::factor(&metric.to_dense(n))?.solve(&rhs),
        },
        OracleKind::QuadraticL1 { p_diag, mu, .. } => {
            let d = metric.diagonal(n).ok_or_else(|| {
                Error::Unsupported("l1 block requires a diagonal subproblem metric".into())
            })?;
            let mut out = Vec::with_capacity(n);
            for j in 0..n {
                let dj = p_diag[j] + d[j];
                if !(dj > T::zero()) {
                    return Err(Error::NotPositiveDefinite {
                        pivot: j,
                        value: dj.to_f64_lossy(),
                    });
                }
                out.push(soft_threshold(rhs[j], *mu) / dj);
            }
            Ok(DenseVector::from_vec(out))
        }
    }
}

fn divide_diag<T: Scalar>(rhs: &DenseVector<T>, d: &[T]) -> Result<DenseVector<T>> {
    let mut out = Vec::with_capacity(d.len());
    for (j, (&r, &dj)) in rhs.iter().zip(d).enumerate() {
        if !(dj > T::zero()) {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: dj.to_f64_lossy(),
            });
        }
        out.push(r / dj);
    }
    Ok(DenseVector::from_vec(out))
}

/// First-order optimality residual of `z` for the subproblem solved by
/// [`prox_subproblem`]: the norm of `∇f(z) + linear + M z` for smooth
/// blocks, the componentwise subgradient violation for ℓ1 blocks.
pub fn subproblem_residual<T: Scalar>(
    oracle: &BlockOracle<T>,
    metric: &Metric<T>,
    linear_term: &DenseVector<T>,
    z: &DenseVector<T>,
) -> Result<T> {
    let w = -&(linear_term + &metric.apply(z));
    oracle.stationarity_residual(z, &w)
}
