//! Phase retrieval from quantized intensity measurements.
//!
//! A real signal `x*` is observed only through `y_i = Q(|a_i^T x*|^2 + xi_i)`,
//! where `Q` is a `k`-level scalar quantizer. Reconstruction lifts the signal
//! to `X = x x^T`, penalises violations of the observed quantization intervals
//! with a one-sided quadratic cost, and runs (accelerated) projected gradient
//! descent onto the set of rank-1 PSD matrices, optionally with hard
//! thresholding for sparse signals.
//!
//! Alongside the solvers the crate provides the supporting analyses:
//! equiprobable and Lloyd-Max quantizer design for the chi-square(1)
//! intensity law, distinguishability bounds, noise robustness, bounds on the
//! consistency cost and the Cramér-Rao bound for quantized noisy intensities.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod analysis;
pub mod crb;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod objective;
pub mod quantizer;
pub mod rng;
pub mod solvers;
pub mod specfun;

pub use error::{QprError, Result};
pub use measurement::{GroundTruth, MeasurementEnsemble, QuantizedObservation};
pub use metrics::ReconReport;
pub use objective::{BinPartition, LiftedEstimate, LineSearchGrid, Loss};
pub use quantizer::{LastSymbolRule, Quantizer};
pub use solvers::{Algorithm, Init, Problem, SolverConfig, SolverTrace};
