use super::conditions::{check_cc1, check_cc3, Cc3Inputs, CertRecord, PcMatrices};
use super::state::{IterateState, Prediction};
use crate::error::Result;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problems::{BlockProblem, SaddlePoint};
use crate::scalar::Scalar;

/// `β^{k−1}, β^k, β^{k+1}` around the current iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWindow<T> {
    pub prev: T,
    pub current: T,
    pub next: T,
}

impl<T: Scalar> PenaltyWindow<T> {
    pub fn constant(beta: T) -> Self {
        Self {
            prev: beta,
            current: beta,
            next: beta,
        }
    }
}

/// Everything one step produces.
#[derive(Debug, Clone)]
pub struct StepOutput<T> {
    pub prediction: Prediction<T>,
    pub next_state: IterateState<T>,
    /// Largest first-order residual among the exact subproblem solves.
    pub subproblem_residual: T,
    pub matrices: Option<PcMatrices<T>>,
    pub h0_next: Option<DenseMatrix<T>>,
    pub cert: CertRecord<T>,
}

/// A Lagrangian method written as prediction + correction.
///
/// Implementors supply the update rules and the matrices; [`PcMethod::step`]
/// wires them together and fills in the certificate.
pub trait PcMethod<T: Scalar>: Sync {
    fn label(&self) -> &'static str;

    fn problem(&self) -> &BlockProblem<T>;

    /// Correction-space coordinates of `(x, λ)`.
    fn v_map(&self, x_blocks: &[DenseVector<T>], lambda: &DenseVector<T>) -> DenseVector<T>;

    fn predict(&self, state: &IterateState<T>, beta: T) -> Result<(Prediction<T>, T)>;

    fn correct(
        &self,
        state: &IterateState<T>,
        prediction: &Prediction<T>,
        beta: T,
    ) -> Result<IterateState<T>>;

    /// `Q, M, H, G` and `H₀` at penalty `beta`.
    fn matrices(&self, beta: T) -> Result<PcMatrices<T>>;

    fn h0(&self, beta: T) -> DenseMatrix<T>;

    /// Ergodic weight `r^k` for penalty `beta`.
    fn weight(&self, beta: T) -> T;

    /// Strong-convexity modulus entering the prediction inequality and the
    /// third condition.
    fn sigma_used(&self) -> T;

    /// The strong-convexity anchor `z` evaluated at primal blocks.
    fn anchor(&self, x_blocks: &[DenseVector<T>]) -> Result<DenseVector<T>>;

    /// `Θ` at `state`, given the penalties that produced and will act on it.
    fn theta(&self, _state: &IterateState<T>, _beta_prev: T, _beta: T) -> T {
        T::zero()
    }

    /// Whether the third convergence condition is claimed for this method.
    fn certifies_cc3(&self) -> bool {
        true
    }

    /// Whether `G^k ⪰ 0` is claimed.
    fn claims_psd_g(&self) -> bool {
        false
    }

    fn state_from(
        &self,
        x_blocks: Vec<DenseVector<T>>,
        lambda: DenseVector<T>,
        iteration: usize,
    ) -> IterateState<T> {
        let v = self.v_map(&x_blocks, &lambda);
        IterateState {
            x_blocks,
            lambda,
            v,
            iteration,
            previous: None,
        }
    }

    /// `x = 0, λ = 0`.
    fn zero_state(&self) -> IterateState<T> {
        let p = self.problem();
        self.state_from(p.zero_blocks(), DenseVector::zeros(p.constraints()), 0)
    }

    /// The state sitting exactly at a saddle point.
    fn saddle_state(&self, saddle: &SaddlePoint<T>) -> IterateState<T> {
        let mut s = self.state_from(
            saddle.x_blocks(self.problem()),
            saddle.lambda_star.clone(),
            0,
        );
        s.previous = Some(s.x_blocks.clone());
        s
    }

    /// One prediction-correction step. With `materialize`, the matrices
    /// are formed and the first and third conditions evaluated against
    /// `reference`.
    fn step(
        &self,
        state: &IterateState<T>,
        window: PenaltyWindow<T>,
        reference: &SaddlePoint<T>,
        materialize: bool,
    ) -> Result<StepOutput<T>> {
        let beta = window.current;
        let (prediction, subproblem_residual) = self.predict(state, beta)?;
        let mut next_state = self.correct(state, &prediction, beta)?;
        next_state.iteration = state.iteration + 1;
        next_state.previous = Some(state.x_blocks.clone());
        let ref_blocks = reference.x_blocks(self.problem());
        let mut cert = CertRecord {
            k: state.iteration,
            r_k: self.weight(beta),
            theta_k: self.theta(state, window.prev, beta),
            theta_next: self.theta(&next_state, beta, window.next),
            z_k: self.anchor(&prediction.x_tilde_blocks)?,
            z_prime: self.anchor(&ref_blocks)?,
            sigma_used: self.sigma_used(),
            cc1_residual: None,
            cc3_slack: None,
        };
        let (matrices, h0_next) = if materialize {
            let m = self.matrices(beta)?;
            let h0_next = self.h0(window.next);
            cert.cc1_residual = Some(check_cc1(&m));
            if self.certifies_cc3() {
                let v_ref = self.v_map(&ref_blocks, &reference.lambda_star);
                cert.cc3_slack = Some(check_cc3(
                    &cert,
                    &m,
                    &h0_next,
                    Cc3Inputs {
                        v_k: &state.v,
                        v_next: &next_state.v,
                        v_tilde: &prediction.v_tilde,
                        v_ref: &v_ref,
                    },
                ));
            }
            (Some(m), Some(h0_next))
        } else {
            (None, None)
        };
        Ok(StepOutput {
            prediction,
            next_state,
            subproblem_residual,
            matrices,
            h0_next,
            cert,
        })
    }
}
