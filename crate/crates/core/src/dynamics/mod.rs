//! Fixed-step simulation of truncated NLS and normal-form fields.

pub mod experiment;
mod field;
mod integrate;
mod nfmap;

pub use experiment::{composition_error_sweep, invariance_experiment, invariance_with, log_log_slope, prepare, CompositionReport, InvarianceConfig, InvarianceReport};
pub use field::{GeneratorField, HamiltonianField, NlsField, VectorField};
pub use integrate::{action_drift, gauge_align, integrate, DriftReport, Scheme, Trajectory};
pub use nfmap::NormalFormMap;
