//! Numerical laboratory for the stability of the Lorentzian catenoid under the
//! hyperbolic vanishing mean curvature flow.

// `!(x > 0.0)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod foliation;
pub mod geometry;
pub mod modulation;
pub mod oracles;
pub mod quadrature;
pub mod shooting;
pub mod spectrum;

pub use error::{CatenoidError, Result};
pub use geometry::{boost, solve_profile, BoostData, CatenoidGeometry, GraphProfile};
pub use modulation::{FirstOrderState, Sector, SymplecticGrid, TestFunctionSet};
pub use spectrum::{Parity, SectorOperator, SpectralData};
pub use acceptance::{run_all, run_criterion, CriterionOutcome};
pub use diagnostics::{DecayFit, DecayRunConfig, RunRecord};
pub use evolution::{Backend, BoundaryCondition, BumpSpec, EvolutionConfig, Integrator};
pub use foliation::ParameterCurves;
pub use shooting::{ShootConfig, ShootResult, ShootingProblem};
