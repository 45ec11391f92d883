//! Grid first-order framework at ℓ = 0, one spherical-harmonic sector at a time.
//!
//! States are (ψ, ψ̇) with ψ̇ = √|h|(h^{−1})^{00}∂_tψ = −w∂_tψ on the even
//! layout of the radial operator. The pairing measure is dω dρ (the √|h|
//! factor lives inside ψ̇), so Ω(u, v) = |overlap|·Σ m_i (u₁v₂ − u₂v₁) with
//! m_i the line-quadrature weight of node i.

use serde::Serialize;

use crate::error::{CatenoidError, Result};
use crate::geometry::{self, CatenoidGeometry};
use crate::spectrum::{assemble_operator, Parity, SectorOperator};

/// |S^{n−1}|.
pub fn sphere_area(n: usize) -> f64 {
    // |S^{k}| recursion: |S^0| = 2, |S^1| = 2π, |S^{k}| = 2π/(k−1)|S^{k−2}|
    let k = n - 1;
    let (mut a, start) = if k.is_multiple_of(2) { (2.0, 0) } else { (2.0 * std::f64::consts::PI, 1) };
    let mut j = start;
    while j < k {
        j += 2;
        a *= 2.0 * std::f64::consts::PI / (j as f64 - 1.0);
    }
    a
}

/// Angular content of a state: radial, or the coordinate harmonic Θ^j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sector {
    Radial,
    Coordinate(usize),
}

impl Sector {
    pub fn harmonic_index(self) -> usize {
        match self {
            Sector::Radial => 0,
            Sector::Coordinate(_) => 1,
        }
    }

    /// ∫_{S^{n−1}} Y² dω for the sector's angular factor Y.
    pub fn angular_overlap(self, n: usize) -> f64 {
        match self {
            Sector::Radial => sphere_area(n),
            Sector::Coordinate(_) => sphere_area(n) / n as f64,
        }
    }
}

/// Sampled first-order state on a leaf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstOrderState {
    pub psi: Vec<f64>,
    pub psi_dot: Vec<f64>,
    pub time: f64,
    pub sector: Sector,
}

impl FirstOrderState {
    pub fn zeros(len: usize, sector: Sector) -> Self {
        Self { psi: vec![0.0; len], psi_dot: vec![0.0; len], time: 0.0, sector }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().chain(&self.psi_dot).all(|v| v.is_finite())
    }

    /// self + c·other (same sector and grid assumed).
    pub fn axpy(&self, c: f64, other: &FirstOrderState) -> FirstOrderState {
        FirstOrderState {
            psi: self.psi.iter().zip(&other.psi).map(|(a, b)| a + c * b).collect(),
            psi_dot: self.psi_dot.iter().zip(&other.psi_dot).map(|(a, b)| a + c * b).collect(),
            time: self.time,
            sector: self.sector,
        }
    }

    pub fn scaled(&self, c: f64) -> FirstOrderState {
        FirstOrderState {
            psi: self.psi.iter().map(|a| c * a).collect(),
            psi_dot: self.psi_dot.iter().map(|a| c * a).collect(),
            time: self.time,
            sector: self.sector,
        }
    }
}

/// Even-layout grid shared by the radial and coordinate sectors.
#[derive(Debug, Clone, Serialize)]
pub struct SymplecticGrid {
    pub n: usize,
    pub radial: SectorOperator,
    pub coordinate: SectorOperator,
    /// Line weights m_i of ∫_ℝ dρ for even integrands (doubled half-line rule).
    pub measure: Vec<f64>,
    /// Volume density w at the nodes.
    pub w: Vec<f64>,
}

impl SymplecticGrid {
    pub fn new(geom: &CatenoidGeometry) -> Self {
        let radial = assemble_operator(geom, 0, Parity::Even);
        let coordinate = assemble_operator(geom, 1, Parity::Even);
        let w: Vec<f64> = radial.nodes.iter().map(|&r| geometry::volume_weight_at(geom.n, r)).collect();
        let measure: Vec<f64> = radial.weights.iter().zip(&w).map(|(a, b)| 2.0 * a / b).collect();
        Self { n: geom.n, radial, coordinate, measure, w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.radial.nodes
    }

    pub fn operator(&self, sector: Sector) -> &SectorOperator {
        match sector {
            Sector::Radial => &self.radial,
            Sector::Coordinate(_) => &self.coordinate,
        }
    }

    fn check(&self, u: &FirstOrderState) -> Result<()> {
        if u.psi.len() != self.len() || u.psi_dot.len() != self.len() {
            return Err(CatenoidError::GridError(format!(
                "state has {}/{} samples, grid has {}",
                u.psi.len(),
                u.psi_dot.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// ∫ f g dω dρ for two profiles in the same sector.
    pub fn pairing(&self, sector: Sector, f: &[f64], g: &[f64]) -> f64 {
        sector.angular_overlap(self.n) * self.measure.iter().zip(f).zip(g).map(|((m, a), b)| m * a * b).sum::<f64>()
    }
}

/// Ω(u, v) = ∫(u₁v₂ − u₂v₁) dω dρ; states in different sectors are orthogonal.
pub fn symplectic_form(grid: &SymplecticGrid, u: &FirstOrderState, v: &FirstOrderState) -> Result<f64> {
    grid.check(u)?;
    grid.check(v)?;
    if u.sector != v.sector {
        return Ok(0.0);
    }
    let s: f64 = (0..grid.len())
        .map(|i| grid.measure[i] * (u.psi[i] * v.psi_dot[i] - u.psi_dot[i] * v.psi[i]))
        .sum();
    Ok(u.sector.angular_overlap(grid.n) * s)
}

/// M(u, p) = (−p/w, −wHu) at ℓ = 0; the drift blocks vanish there.
pub fn matrix_operator_apply(grid: &SymplecticGrid, ell: &[f64], state: &FirstOrderState) -> Result<FirstOrderState> {
    let speed = ell.iter().map(|v| v * v).sum::<f64>().sqrt();
    if speed >= 1.0 {
        return Err(CatenoidError::SuperluminalBoost(speed));
    }
    if speed > 0.0 {
        return Err(CatenoidError::InvalidParameter(
            "harmonic sectors decouple only at l = 0; use BoostedFrame for moving profiles".into(),
        ));
    }
    grid.check(state)?;
    let hu = grid.operator(state.sector).apply(&state.psi);
    Ok(FirstOrderState {
        psi: state.psi_dot.iter().zip(&grid.w).map(|(p, w)| -p / w).collect(),
        psi_dot: hu.iter().zip(&grid.w).map(|(h, w)| -w * h).collect(),
        time: state.time,
        sector: state.sector,
    })
}

/// The linear flow ∂_t u = Mu + forcing, advanced by one classical RK4 step.
pub fn rk4_step(grid: &SymplecticGrid, u: &FirstOrderState, forcing: Option<&FirstOrderState>, dt: f64) -> Result<FirstOrderState> {
    let f = |s: &FirstOrderState| -> Result<FirstOrderState> {
        let m = matrix_operator_apply(grid, &[], s)?;
        Ok(match forcing {
            Some(k) => m.axpy(1.0, k),
            None => m,
        })
    };
    let k1 = f(u)?;
    let k2 = f(&u.axpy(0.5 * dt, &k1))?;
    let k3 = f(&u.axpy(0.5 * dt, &k2))?;
    let k4 = f(&u.axpy(dt, &k3))?;
    let mut out = u.axpy(dt / 6.0, &k1).axpy(dt / 3.0, &k2).axpy(dt / 3.0, &k3).axpy(dt / 6.0, &k4);
    out.time = u.time + dt;
    Ok(out)
}
