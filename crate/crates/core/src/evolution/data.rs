//! Initial data ε(ψ₀ + bφ̃_μ, ψ₁ + μbφ̃_μ) with φ̃_μ = χ(·, R/4)φ_μ.

use serde::{Deserialize, Serialize};

use crate::error::{CatenoidError, Result};
use crate::modulation::{cutoff, FirstOrderState, Sector, SymplecticGrid};
use crate::spectrum::SpectralData;

/// Even bump (1 − s²)⁴, s = (|ρ| − center)/width, for ψ₀ and ∂_tψ₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub width: f64,
    pub amp_psi: f64,
    pub amp_dt: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self { center: 0.0, width: 4.0, amp_psi: 1.0, amp_dt: 0.0 }
    }
}

impl BumpSpec {
    pub fn profile(&self, rho: f64) -> f64 {
        let s = (rho.abs() - self.center) / self.width;
        if s.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - s * s;
            q * q * q * q
        }
    }

    /// Outer edge of the support in |ρ|.
    pub fn support_radius(&self) -> f64 {
        self.center + self.width
    }
}

/// One-parameter family of data along the unstable direction.
#[derive(Debug, Clone, Serialize)]
pub struct DataFamily {
    pub epsilon: f64,
    pub bump: BumpSpec,
    /// Foliation radius R; everything is supported in |ρ| < R/2.
    pub radius: f64,
    pub mu: f64,
    pub nodes: Vec<f64>,
    pub w: Vec<f64>,
    pub phi_tilde: Vec<f64>,
}

impl DataFamily {
    pub fn new(grid: &SymplecticGrid, spectral: &SpectralData, bump: BumpSpec, epsilon: f64, radius: f64) -> Result<Self> {
        if spectral.phi_mu.len() != grid.len() {
            return Err(CatenoidError::GridError("spectral data must use the even layout of the grid".into()));
        }
        if !(bump.width > 0.0) || bump.center < 0.0 {
            return Err(CatenoidError::InvalidParameter(format!("bump {bump:?}")));
        }
        let limit = 0.5 * radius;
        if bump.support_radius() > limit {
            return Err(CatenoidError::SupportError { limit });
        }
        let phi_tilde = grid.nodes().iter().zip(&spectral.phi_mu).map(|(&r, p)| cutoff(r, 0.25 * radius) * p).collect();
        Ok(Self {
            epsilon,
            bump,
            radius,
            mu: spectral.mu(),
            nodes: grid.nodes().to_vec(),
            w: grid.w.clone(),
            phi_tilde,
        })
    }

    /// (ψ, ∂_tψ) at parameter b.
    pub fn velocity_form(&self, b: f64) -> (Vec<f64>, Vec<f64>) {
        let e = self.epsilon;
        let psi = self.nodes.iter().zip(&self.phi_tilde).map(|(&r, p)| e * (self.bump.amp_psi * self.bump.profile(r) + b * p)).collect();
        let dt = self
            .nodes
            .iter()
            .zip(&self.phi_tilde)
            .map(|(&r, p)| e * (self.bump.amp_dt * self.bump.profile(r) + self.mu * b * p))
            .collect();
        (psi, dt)
    }

    /// First-order state (ψ, −w∂_tψ) at parameter b.
    pub fn state(&self, b: f64) -> FirstOrderState {
        let (psi, dt) = self.velocity_form(b);
        FirstOrderState { psi, psi_dot: dt.iter().zip(&self.w).map(|(v, w)| -w * v).collect(), time: 0.0, sector: Sector::Radial }
    }
}

pub fn initial_data(
    epsilon: f64,
    bump: BumpSpec,
    b: f64,
    grid: &SymplecticGrid,
    spectral: &SpectralData,
    radius: f64,
) -> Result<FirstOrderState> {
    Ok(DataFamily::new(grid, spectral, bump, epsilon, radius)?.state(b))
}
