//! First-order symplectic framework: momentum variable, matrix operator,
//! generalized eigenfunctions, truncated test functions, causal smoothing,
//! modulation equations and the unstable-mode coefficients.

pub mod frame;
pub mod series;
pub mod smoother;
pub mod symplectic;
pub mod test_functions;
pub mod unstable;

pub use frame::BoostedFrame;
pub use series::{modulation_rhs, omega_step, run_modulated_linear, ModulatedState, ModulationConfig, ModulationSeries};
pub use smoother::{SampledSmoother, Smoother};
pub use symplectic::{matrix_operator_apply, rk4_step, symplectic_form, FirstOrderState, Sector, SymplecticGrid};
pub use test_functions::{cutoff, kernel_states, truncate_test_functions, TestFunctionSet};
pub use unstable::{aplus_aminus_rhs, integrate_unstable_odes, UnstablePairings, UnstableTracker};
