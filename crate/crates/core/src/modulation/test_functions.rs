//! Truncated test functions Z_i = χφ⃗_i and the unstable pair Z_±.

use nalgebra::DMatrix;
use serde::Serialize;

use super::symplectic::{matrix_operator_apply, symplectic_form, FirstOrderState, Sector, SymplecticGrid};
use crate::error::{CatenoidError, Result};
use crate::spectrum::{translation_mode_profile, SpectralData};

/// Minimum fraction of ‖φ_μ‖² that the cutoff has to keep.
pub const MIN_RETAINED: f64 = 0.999;

/// C³ smoothstep: 1 for |ρ| ≤ r1, 0 for |ρ| ≥ 2r1, 7th-order blend in between.
pub fn cutoff(rho: f64, r1: f64) -> f64 {
    let x = (rho.abs() - r1) / r1;
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        let x4 = x * x * x * x;
        1.0 - x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
    }
}

/// Untruncated generalized eigenfunctions at ℓ = 0 on the grid:
/// φ⃗_i = (⟨ρ⟩^{1−n}, 0) and φ⃗_{n+i} = (0, −w⟨ρ⟩^{1−n}) in sector Θ^i.
pub fn kernel_states(grid: &SymplecticGrid) -> Vec<FirstOrderState> {
    let n = grid.n;
    let f: Vec<f64> = grid.nodes().iter().map(|&r| translation_mode_profile(n, r)).collect();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        out.push(FirstOrderState { psi: f.clone(), psi_dot: vec![0.0; f.len()], time: 0.0, sector: Sector::Coordinate(i) });
    }
    for i in 0..n {
        let p = f.iter().zip(&grid.w).map(|(a, w)| -w * a).collect();
        out.push(FirstOrderState { psi: vec![0.0; f.len()], psi_dot: p, time: 0.0, sector: Sector::Coordinate(i) });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct TestFunctionSet {
    pub r1: f64,
    pub chi: Vec<f64>,
    /// Z_1…Z_{2n}.
    pub z: Vec<FirstOrderState>,
    pub z_plus: FirstOrderState,
    pub z_minus: FirstOrderState,
    /// c₊ = c₋.
    pub c_pm: f64,
    pub mu: f64,
    /// ‖χφ_μ‖²/‖φ_μ‖².
    pub retained: f64,
}

/// Build Z_i and Z_± = c(χφ_μ, ∓μwχφ_μ) with Ω(Z₊, Z₋) = 1.
pub fn truncate_test_functions(grid: &SymplecticGrid, spectral: &SpectralData, r1: f64) -> Result<TestFunctionSet> {
    if spectral.phi_mu.len() != grid.len() {
        return Err(CatenoidError::GridError("spectral data must use the even layout of the same grid".into()));
    }
    if !(r1 > 0.0) {
        return Err(CatenoidError::InvalidParameter(format!("cutoff radius {r1}")));
    }
    let chi: Vec<f64> = grid.nodes().iter().map(|&r| cutoff(r, r1)).collect();
    let phi = &spectral.phi_mu;
    let cphi: Vec<f64> = phi.iter().zip(&chi).map(|(a, c)| a * c).collect();
    let full = spectral.op.inner(phi, phi);
    let retained = spectral.op.inner(&cphi, &cphi) / full;
    if retained < MIN_RETAINED {
        return Err(CatenoidError::TruncationLoss { retained });
    }
    let z = kernel_states(grid)
        .into_iter()
        .map(|s| FirstOrderState {
            psi: s.psi.iter().zip(&chi).map(|(a, c)| a * c).collect(),
            psi_dot: s.psi_dot.iter().zip(&chi).map(|(a, c)| a * c).collect(),
            ..s
        })
        .collect();
    let mu = spectral.mu();
    let pair = |sign: f64| FirstOrderState {
        psi: cphi.clone(),
        psi_dot: cphi.iter().zip(&grid.w).map(|(a, w)| sign * mu * w * a).collect(),
        time: 0.0,
        sector: Sector::Radial,
    };
    let (zp, zm) = (pair(-1.0), pair(1.0));
    let raw = symplectic_form(grid, &zp, &zm)?;
    let c_pm = 1.0 / raw.sqrt();
    Ok(TestFunctionSet { r1, chi, z, z_plus: zp.scaled(c_pm), z_minus: zm.scaled(c_pm), c_pm, mu, retained })
}

impl TestFunctionSet {
    /// d_ij = ∫χ ν^iν^j √|h|(h^{−1})^{00} dω dρ (negative on the diagonal).
    pub fn d_matrix(&self, grid: &SymplecticGrid) -> DMatrix<f64> {
        let n = grid.n;
        let f: Vec<f64> = grid.nodes().iter().map(|&r| translation_mode_profile(n, r)).collect();
        let g: Vec<f64> = f.iter().zip(&grid.w).zip(&self.chi).map(|((a, w), c)| -c * w * a).collect();
        let diag = grid.pairing(Sector::Coordinate(0), &f, &g);
        DMatrix::from_diagonal_element(n, n, diag)
    }

    /// Leading block of the modulation equations for ℘̇ = (ℓ̇, ξ̇ − ℓ):
    /// Ω(K⃗, Z_i) = Σ_j d_ij ℓ̇_j and Ω(K⃗, Z_{n+i}) = −Σ_j d_ij(ξ̇_j − ℓ_j).
    pub fn modulation_block(&self, grid: &SymplecticGrid) -> DMatrix<f64> {
        let n = grid.n;
        let d = self.d_matrix(grid);
        let mut b = DMatrix::zeros(2 * n, 2 * n);
        b.view_mut((0, 0), (n, n)).copy_from(&d);
        b.view_mut((n, n), (n, n)).copy_from(&(-d));
        b
    }

    /// MZ₊ − μZ₊ and MZ₋ + μZ₋.
    pub fn unstable_errors(&self, grid: &SymplecticGrid) -> Result<(FirstOrderState, FirstOrderState)> {
        let ep = matrix_operator_apply(grid, &[], &self.z_plus)?.axpy(-self.mu, &self.z_plus);
        let em = matrix_operator_apply(grid, &[], &self.z_minus)?.axpy(self.mu, &self.z_minus);
        Ok((ep, em))
    }
}
