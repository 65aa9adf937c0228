//! Action-angle openings of finitely many sites and the diagnostics built on them.
//!
//! Opening a site `j` writes `u_j = (ξ_j + y_j)^{1/2} e^{iθ_j}`. With the crate's
//! bracket this gives `{y_j, θ_j} = 2`, so the frequency of a site is
//! `ω_j = 2 ∂H/∂y_j` and that of an exterior mode is twice the coefficient of `|u_j|²`.

mod aa;
pub mod frequency;
pub mod precondition;
pub mod sampling;
pub mod sparsity;
mod xipoly;

pub use aa::{aa_bracket, open_sites, project, AAHamiltonian, AAKey, OpeningSpec, Projection, RadiiWindow, TbrParams};
pub use frequency::{lambda_lipschitz_matrix, lipschitz_shape, twist_margin, twist_passes, FrequencyMap, LipschitzMatrix, LipschitzReport};
pub use precondition::{precondition_and_open, PreconditionReport, XiPoint};
pub use sampling::{small_divisor_bad_measure, wilson_interval, DivisorWitness, SmallDivisorConfig, SmallDivisorReport};
pub use sparsity::{doubly_exponential, parse_sequence, sparsity_functional, sparsity_trend, SparsityTrend};
pub use xipoly::XiPoly;
