//! The prediction-correction engine: iteration contract, condition
//! checkers, ergodic averaging and gap metrics.

mod conditions;
mod engine;
mod method;
mod metrics;
mod state;

pub use conditions::{
    check_cc1, check_cc2, check_cc3, check_scale, lemma2_identity_check,
    prediction_inequality_slack, Cc3Inputs, CertRecord, Competitor, PcMatrices,
};
pub use engine::{
    read_trace_csv, run_method, write_rows_csv, write_trace_csv, write_trace_json, Check,
    CheckValues, RunOptions, SolverTrace, TraceRecord, TraceRow, Violation, BOUND_SLACK, CC1_TOL,
    CC2_TOL, CC3_TOL, CORRECTION_TOL, LEMMA2_TOL, PREDICTION_TOL, PSD_TOL, SUBPROBLEM_TOL,
};
pub use method::{PcMethod, PenaltyWindow, StepOutput};
pub use metrics::{gap_metrics, residual_F, ErgodicAverage, GapMetrics};
pub use state::{IterateState, Prediction};
