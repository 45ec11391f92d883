//! Time evolution: the linearized wave per harmonic sector and the nonlinear
//! rotationally symmetric flow in normal gauge.

pub mod data;
pub mod exterior;
pub mod linear;
pub mod nonlinear;

use serde::{Deserialize, Serialize};

use crate::error::{CatenoidError, Result};
use crate::geometry::CatenoidGeometry;
use crate::spectrum::Parity;

pub use data::{initial_data, BumpSpec, DataFamily};
pub use exterior::{conjugate_exterior, conjugation_excess, conjugation_factor, unconjugate_exterior};
pub use linear::{linear_energy, staggered_energy, step_linear, LinearEvolver, LinearState};
pub use nonlinear::{step_nonlinear, NonlinearEvolver, NonlinearState, RadialAction, BREAKDOWN_FLOOR};

/// Where and why the perturbed surface stopped being a timelike immersion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownReport {
    pub time: f64,
    pub location: f64,
    pub quantity: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Zero at ρ_max; exact as long as the run stays inside the causal horizon.
    Dirichlet,
    /// First-order outgoing condition at ρ_max (approximate).
    Sommerfeld,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Leapfrog,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Linear,
    NonlinearRadial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub n: usize,
    pub rho_max: f64,
    pub intervals: usize,
    pub parity: Parity,
    /// Harmonic indices evolved by the linear backend.
    pub sectors: Vec<usize>,
    pub cfl: f64,
    pub horizon: f64,
    pub bc: BoundaryCondition,
    pub integrator: Integrator,
    pub epsilon: f64,
    pub backend: Backend,
    /// Outer radius of the initial data support.
    pub data_support: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            n: 5,
            rho_max: 40.0,
            intervals: 4096,
            parity: Parity::Even,
            sectors: vec![0],
            cfl: 0.5,
            horizon: 30.0,
            bc: BoundaryCondition::Dirichlet,
            integrator: Integrator::Leapfrog,
            epsilon: 1e-3,
            backend: Backend::Linear,
            data_support: 5.0,
        }
    }
}

impl EvolutionConfig {
    /// Smallest arclength spacing h√g_ρρ(0) = h/√(n−1).
    pub fn min_spacing(&self, geom: &CatenoidGeometry) -> f64 {
        geom.spacing() / ((geom.n - 1) as f64).sqrt()
    }

    /// Samples per unit time m, so that dt = 1/m ≤ cfl·(minimum spacing).
    pub fn steps_per_unit(&self, geom: &CatenoidGeometry) -> usize {
        (1.0 / (self.cfl * self.min_spacing(geom))).ceil().max(8.0) as usize
    }

    pub fn dt(&self, geom: &CatenoidGeometry) -> f64 {
        1.0 / self.steps_per_unit(geom) as f64
    }

    pub fn validate(&self, geom: &CatenoidGeometry) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(CatenoidError::InvalidParameter(format!("cfl {} outside (0, 1]", self.cfl)));
        }
        if !(self.horizon >= 0.0) {
            return Err(CatenoidError::InvalidParameter(format!("horizon {}", self.horizon)));
        }
        if self.bc == BoundaryCondition::Dirichlet && self.horizon + self.data_support > geom.rho_max {
            return Err(CatenoidError::InvalidParameter(format!(
                "horizon {} plus data support {} exceeds rho_max {}",
                self.horizon, self.data_support, geom.rho_max
            )));
        }
        if self.backend == Backend::NonlinearRadial && self.parity != Parity::Even {
            return Err(CatenoidError::InvalidParameter("the nonlinear radial backend uses the even layout".into()));
        }
        Ok(())
    }
}
