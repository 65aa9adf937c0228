//! Exact sparse algebra of Fourier-monomial Hamiltonians.

pub mod bracket;
pub mod coeff;
pub mod hamiltonian;
pub mod monomial;
pub mod multiset;
pub mod numeric;

pub use bracket::{poisson_bracket, poisson_bracket_bounded};
pub use coeff::{rat, ratio, rational_to_f64, Coeff};
pub use hamiltonian::{japanese, unit_weight, Hamiltonian, Truncation};
pub use monomial::{Factor, MonoKey, Monomial, Sign};
pub use numeric::{evaluate, gradient, Gradient, NumericHamiltonian, State, C64};
