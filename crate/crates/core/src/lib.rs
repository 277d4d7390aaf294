//! Linear-optics noon-state preparation under imperfect phase control.
//!
//! - [`fock`]: two-mode Fock algebra at fixed photon number.
//! - [`noisy_prep`]: Gaussian-phase-noise averaged preparation states.
//! - [`metrology`]: measurement model, Fisher information, Cramér–Rao bounds.
//! - [`bootstrap`]: iterative recalibration of the phase shifters.
//! - [`estimation`]: simulated shots and maximum-likelihood estimation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod bootstrap;
pub mod error;
pub mod estimation;
pub mod fock;
pub mod metrology;
pub mod noisy_prep;
pub mod rng;

pub use bootstrap::{BootstrapRow, BootstrapSchedule, DelayLineSpec, TrajectoryComparison};
pub use error::{NoonError, Result};
pub use estimation::{EstimationSummary, ShotRecord};
pub use fock::{noon_state, DensityMatrix, Normalization, PureState};
pub use metrology::{FisherVariant, MeasurementModel, RestPolicy, SensitivityReport};
pub use noisy_prep::{ExactMixture, MonteCarloMixture, NoiseModel, PhaseSample, TargetConvention};
