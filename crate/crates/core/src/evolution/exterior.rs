//! Conjugation φ = sϕ on the exterior, s = √(1 + Q'²) for the static graph.

use crate::error::{CatenoidError, Result};

/// s(r) = r^{n−1}/√(r^{2(n−1)} − 1).
pub fn conjugation_factor(n: usize, r: f64) -> Result<f64> {
    Ok(1.0 + conjugation_excess(n, r)?)
}

/// s − 1 = Q'²/(s + 1), accurate where s rounds to 1.
pub fn conjugation_excess(n: usize, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(CatenoidError::InvalidDimension(n));
    }
    if !(r > 1.0) {
        return Err(CatenoidError::InvalidParameter(format!("exterior radius {r} must exceed the neck")));
    }
    // Q'² = 1/(r^{2(n−1)} − 1)
    let qp2 = 1.0 / ((2.0 * (n - 1) as f64) * r.ln()).exp_m1();
    let s = (1.0 + qp2).sqrt();
    Ok(qp2 / (s + 1.0))
}

/// ϕ = φ/s.
pub fn conjugate_exterior(n: usize, radii: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    if radii.len() != phi.len() {
        return Err(CatenoidError::GridError(format!("{} radii for {} values", radii.len(), phi.len())));
    }
    radii.iter().zip(phi).map(|(&r, p)| Ok(p / conjugation_factor(n, r)?)).collect()
}

/// φ = sϕ.
pub fn unconjugate_exterior(n: usize, radii: &[f64], varphi: &[f64]) -> Result<Vec<f64>> {
    if radii.len() != varphi.len() {
        return Err(CatenoidError::GridError(format!("{} radii for {} values", radii.len(), varphi.len())));
    }
    radii.iter().zip(varphi).map(|(&r, p)| Ok(p * conjugation_factor(n, r)?)).collect()
}
