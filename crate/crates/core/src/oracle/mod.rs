//! Reference gradient computations for verification.
//!
//! Nothing here reuses the learning-rule code: the network is re-simulated
//! with scalar loops and every quantity is recomputed from the full record.

mod cases;
mod compare;
mod finite_diff;
mod naive;
mod stbp;
mod tape;

pub use cases::{random_case, CaseConfig};
pub use compare::{compare_gradients, relative_error, CompareReport, RELATIVE_FLOOR};
pub use finite_diff::{central_difference, finite_diff_gradient, relaxed_loss, DEFAULT_STEP};
pub use naive::{naive_stop_gradients, NAIVE_PARAM_LIMIT};
pub use stbp::{unrolled_stbp_gradients, StbpOutcome, TAPE_SCALAR_LIMIT};
pub use tape::{TapeLayer, UnrolledTape};
