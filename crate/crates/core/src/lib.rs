//! Training engine for deep feedforward spiking networks built from leaky
//! integrate-and-fire neurons.
//!
//! Learning combines neuron errors propagated backward through the layers
//! within each time-step with eligibility traces carried forward through
//! time, so no per-time-step history is stored. Synaptic weights, firing
//! thresholds and leakage factors can be trained jointly.
//!
//! The [`oracle`] module holds independent reference computations (unrolled
//! backpropagation through time, finite differences, a per-scalar evaluation
//! of the learning rule) used to verify the streaming implementation.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

mod error;

pub mod data;
pub mod eval;
pub mod gradients;
pub mod learn;
pub mod lif;
pub mod numerics;
pub mod optim;
pub mod oracle;
pub mod topology;

pub use error::{Error, Result};
pub use gradients::GradientSet;
pub use lif::{Frames, LifState, SpikeMode, SurrogateKind};
pub use numerics::Tensor;
pub use topology::{InitMode, LayerParams, LayerSpec, NetworkParams, NetworkSpec};
