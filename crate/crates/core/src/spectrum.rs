//! Stability operator H̄ = Δ + |II|² of the catenoid, one spherical-harmonic
//! sector at a time.
//!
//! Each sector is a Sturm–Liouville operator (1/w)(a u')' + V_eff u on the ρ
//! grid. The flux-form discretization is symmetric in the w-weighted inner
//! product, so we work with its symmetric tridiagonal similarity transform.

use serde::{Deserialize, Serialize};

use crate::error::{CatenoidError, Result};
use crate::geometry::{self, jap, CatenoidGeometry};
use crate::quadrature;

/// Restriction of a radial sector to functions of definite parity in ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Full,
    Even,
    Odd,
}

/// Discrete sector operator on the unknown nodes of a parity layout.
#[derive(Debug, Clone, Serialize)]
pub struct SectorOperator {
    pub n: usize,
    pub harmonic_index: usize,
    pub parity: Parity,
    pub h: f64,
    /// Coordinates of the unknowns (Dirichlet nodes excluded).
    pub nodes: Vec<f64>,
    /// Quadrature weights of the w-inner product (h·w, halved at a symmetry node).
    pub weights: Vec<f64>,
    /// Diagonal of the unsymmetrized operator.
    pub diag: Vec<f64>,
    /// Coupling a_{i+½}/h² between unknown i and i+1, before dividing by the weight.
    pub flux: Vec<f64>,
}

/// Effective potential |II|² − ℓ_h(ℓ_h+n−2)⟨ρ⟩^{−2}.
pub fn effective_potential(n: usize, harmonic_index: usize, rho: f64) -> f64 {
    let k = harmonic_index as f64;
    geometry::ii_sq_at(n, rho) - k * (k + n as f64 - 2.0) / (1.0 + rho * rho)
}

pub fn assemble_operator(geom: &CatenoidGeometry, harmonic_index: usize, parity: Parity) -> SectorOperator {
    let n = geom.n;
    let h = geom.spacing();
    let c = geom.center();
    let nodes: Vec<f64> = match parity {
        Parity::Full => geom.grid[1..geom.n_intervals].to_vec(),
        Parity::Even => geom.grid[c..geom.n_intervals].to_vec(),
        Parity::Odd => geom.grid[c + 1..geom.n_intervals].to_vec(),
    };
    let m = nodes.len();
    let mut weights: Vec<f64> = nodes.iter().map(|&r| h * geometry::volume_weight_at(n, r)).collect();
    if parity == Parity::Even {
        weights[0] *= 0.5;
    }
    // h·a_{i±½}/h² terms; the h of the weight cancels the h of the flux difference
    let a_half = |r: f64| geometry::flux_coeff_at(n, r) / h;
    let flux: Vec<f64> = (0..m.saturating_sub(1)).map(|i| a_half(nodes[i] + 0.5 * h)).collect();
    let diag: Vec<f64> = (0..m)
        .map(|i| {
            let r = nodes[i];
            let right = a_half(r + 0.5 * h);
            let left = if parity == Parity::Even && i == 0 { 0.0 } else { a_half(r - 0.5 * h) };
            -(left + right) / weights[i] + effective_potential(n, harmonic_index, r)
        })
        .collect();
    SectorOperator { n, harmonic_index, parity, h, nodes, weights, diag, flux }
}

impl SectorOperator {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut s = self.diag[i] * u[i];
                if i + 1 < m {
                    s += self.flux[i] * u[i + 1] / self.weights[i];
                }
                if i > 0 {
                    s += self.flux[i - 1] * u[i - 1] / self.weights[i];
                }
                s
            })
            .collect()
    }

    /// ⟨u, v⟩_w on this layout.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }

    /// Symmetric tridiagonal (diag, offdiag) similar to the operator via √W scaling.
    pub fn symmetric_tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let off = (0..self.len().saturating_sub(1))
            .map(|i| self.flux[i] / (self.weights[i] * self.weights[i + 1]).sqrt())
            .collect();
        (self.diag.clone(), off)
    }

    /// Gershgorin interval containing the spectrum.
    fn bounds(&self) -> (f64, f64) {
        let (d, e) = self.symmetric_tridiagonal();
        let m = d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < m { e[i].abs() } else { 0.0 };
            lo = lo.min(d[i] - r);
            hi = hi.max(d[i] + r);
        }
        (lo, hi)
    }
}

/// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if q == 0.0 { f64::EPSILON * (1.0 + e[i - 1].abs()) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solve (T − λ)x = b for symmetric tridiagonal T by Gaussian elimination with
/// partial pivoting.
fn tridiag_shifted_solve(d: &[f64], e: &[f64], lambda: f64, b: &[f64]) -> Vec<f64> {
    let m = d.len();
    // rows as (sub, diag, sup, sup2) after pivoting
    let mut sub: Vec<f64> = (0..m).map(|i| if i > 0 { e[i - 1] } else { 0.0 }).collect();
    let mut dia: Vec<f64> = d.iter().map(|v| v - lambda).collect();
    let mut sup: Vec<f64> = (0..m).map(|i| if i + 1 < m { e[i] } else { 0.0 }).collect();
    let mut sup2 = vec![0.0; m];
    let mut rhs = b.to_vec();
    let tiny = f64::EPSILON * d.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for i in 0..m.saturating_sub(1) {
        if sub[i + 1].abs() > dia[i].abs() {
            // swap rows i and i+1
            std::mem::swap(&mut dia[i], &mut sub[i + 1]);
            std::mem::swap(&mut sup[i], &mut dia[i + 1]);
            let s2_next = if i + 1 < m { sup[i + 1] } else { 0.0 };
            sup2[i] = s2_next;
            sup[i + 1] = 0.0;
            rhs.swap(i, i + 1);
        }
        if dia[i] == 0.0 {
            dia[i] = tiny;
        }
        let f = sub[i + 1] / dia[i];
        dia[i + 1] -= f * sup[i];
        if i + 2 < m {
            sup[i + 1] -= f * sup2[i];
        }
        rhs[i + 1] -= f * rhs[i];
        sub[i + 1] = 0.0;
    }
    if dia[m - 1] == 0.0 {
        dia[m - 1] = tiny;
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = rhs[i];
        if i + 1 < m {
            s -= sup[i] * x[i + 1];
        }
        if i + 2 < m {
            s -= sup2[i] * x[i + 2];
        }
        x[i] = s / dia[i];
    }
    x
}

/// Eigenpair with w-normalized eigenvector on the operator's layout.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// The `count` largest eigenpairs, largest first.
pub fn eigen_solve(op: &SectorOperator, count: usize) -> Result<Vec<EigenPair>> {
    let m = op.len();
    if count > m {
        return Err(CatenoidError::EigenFailure(format!("requested {count} of {m} eigenvalues")));
    }
    let (d, e) = op.symmetric_tridiagonal();
    let (lo0, hi0) = op.bounds();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        // eigenvalue with exactly m−1−k eigenvalues strictly below it
        let target = m - 1 - k;
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(&d, &e, mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let value = 0.5 * (lo + hi);
        let vector = inverse_iteration(op, &d, &e, value)?;
        out.push(EigenPair { value, vector });
    }
    Ok(out)
}

fn inverse_iteration(op: &SectorOperator, d: &[f64], e: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let m = d.len();
    // deterministic, generic start vector
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_749_895).fract()).collect();
    let shift = lambda + 1e-13 * (1.0 + lambda.abs());
    for _ in 0..4 {
        let mut x = tridiag_shifted_solve(d, e, shift, &v);
        let nrm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(CatenoidError::EigenFailure(format!("inverse iteration at {lambda}")));
        }
        x.iter_mut().for_each(|a| *a /= nrm);
        v = x;
    }
    // back to the unsymmetrized basis, then w-normalize
    let mut u: Vec<f64> = v.iter().zip(&op.weights).map(|(a, w)| a / w.sqrt()).collect();
    let nrm = op.inner(&u, &u).sqrt();
    // sign convention: positive at the node of largest magnitude
    let imax = (0..m).max_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap_or(0);
    let sgn = u[imax].signum();
    u.iter_mut().for_each(|a| *a *= sgn / nrm);
    Ok(u)
}

/// Radial profile of the translation zero modes e_1…e_n: ⟨ρ⟩^{1−n}.
pub fn translation_mode_profile(n: usize, rho: f64) -> f64 {
    jap(rho).powi(1 - n as i32)
}

/// Profile of e_{n+1} = √(⟨ρ⟩^{2(n−1)}−1)/⟨ρ⟩^{n−1} (sign of ρ); not in L².
pub fn vertical_mode_profile(n: usize, rho: f64) -> f64 {
    let r = jap(rho).powi(n as i32 - 1);
    (r * r - 1.0).sqrt().copysign(rho) / r
}

/// Sampled zero modes on the geometry grid.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroModes {
    /// e_j radial profile (angular factor Θ^j).
    pub translation: Vec<f64>,
    /// e_{n+1} profile.
    pub vertical: Vec<f64>,
}

pub fn zero_modes(geom: &CatenoidGeometry) -> ZeroModes {
    ZeroModes {
        translation: geom.grid.iter().map(|&r| translation_mode_profile(geom.n, r)).collect(),
        vertical: geom.grid.iter().map(|&r| vertical_mode_profile(geom.n, r)).collect(),
    }
}

/// Stencil of the sector operator at every interior grid node, for a function
/// given at all nodes (no boundary condition imposed).
pub fn stencil_apply(geom: &CatenoidGeometry, harmonic_index: usize, u: &[f64]) -> Vec<f64> {
    let n = geom.n;
    let h = geom.spacing();
    (1..geom.n_intervals)
        .map(|i| {
            let r = geom.grid[i];
            let ap = geometry::flux_coeff_at(n, r + 0.5 * h);
            let am = geometry::flux_coeff_at(n, r - 0.5 * h);
            (ap * (u[i + 1] - u[i]) - am * (u[i] - u[i - 1])) / (h * h * geom.volume_weight[i])
                + effective_potential(n, harmonic_index, r) * u[i]
        })
        .collect()
}

/// Spectral data of the radial (ℓ_h = 0) sector.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralData {
    pub n: usize,
    /// μ² extrapolated from grids N and 2N (Richardson, order 2).
    pub mu_sq: f64,
    /// μ² of the discrete operator on this grid; the exact growth rate of the
    /// discrete linear evolution.
    pub mu_sq_grid: f64,
    /// Operator the data lives on.
    pub op: SectorOperator,
    /// w-normalized eigenfunction on `op.nodes`.
    pub phi_mu: Vec<f64>,
    /// Discrete bound states removed by P_c (w-orthonormal, on `op.nodes`).
    pub bound_states: Vec<Vec<f64>>,
}

impl SpectralData {
    pub fn mu(&self) -> f64 {
        self.mu_sq_grid.sqrt()
    }
}

/// Positive eigenpair of the ℓ_h = 0 sector on `geom` with the given layout.
pub fn radial_spectrum(geom: &CatenoidGeometry, parity: Parity) -> Result<SpectralData> {
    let op = assemble_operator(geom, 0, parity);
    let top = eigen_solve(&op, 2)?;
    if !(top[0].value > 1e-6) || top[1].value > 1e-6 {
        return Err(CatenoidError::EigenFailure(format!(
            "expected a single positive eigenvalue, found {} and {}",
            top[0].value, top[1].value
        )));
    }
    let fine = geometry::solve_profile(geom.n, geom.rho_max, 2 * geom.n_intervals)?;
    let fine_top = eigen_solve(&assemble_operator(&fine, 0, Parity::Even), 1)?;
    let coarse = if parity == Parity::Even {
        top[0].value
    } else {
        eigen_solve(&assemble_operator(geom, 0, Parity::Even), 1)?[0].value
    };
    let mu_sq = (4.0 * fine_top[0].value - coarse) / 3.0;
    let phi = top[0].vector.clone();
    Ok(SpectralData {
        n: geom.n,
        mu_sq,
        mu_sq_grid: top[0].value,
        phi_mu: phi.clone(),
        bound_states: vec![phi],
        op,
    })
}

/// Continuous-spectrum projector u ↦ u − Σ⟨u, b_k⟩_w b_k over the bound states.
pub fn project_continuous(u: &[f64], op: &SectorOperator, bound_states: &[Vec<f64>]) -> Result<Vec<f64>> {
    if u.len() != op.len() {
        return Err(CatenoidError::GridError(format!("state has {} values, grid {}", u.len(), op.len())));
    }
    let mut out = u.to_vec();
    for b in bound_states {
        let c = op.inner(&out, b);
        out.iter_mut().zip(b).for_each(|(o, bi)| *o -= c * bi);
    }
    Ok(out)
}

/// Least-squares decay rate of log|φ| against arclength over ρ ∈ [lo, hi].
pub fn fit_exponential_rate(op: &SectorOperator, phi: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let n = op.n;
    let arclength = |r: f64| quadrature::integrate(|s| geometry::g_rr_at(n, s).sqrt(), 0.0, r, 1e-14, 1e-13);
    let peak = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &r) in op.nodes.iter().enumerate() {
        if r >= lo && r <= hi {
            let v = phi[i].abs();
            if !(v > 1e-250 * peak.max(1e-300)) {
                return Err(CatenoidError::FitWindowTooFar(format!("|phi({r})| = {v}")));
            }
            xs.push(arclength(r)?);
            ys.push(v.ln());
        }
    }
    if xs.len() < 3 {
        return Err(CatenoidError::FitWindowTooFar(format!("window [{lo}, {hi}] holds {} nodes", xs.len())));
    }
    Ok(quadrature::linear_fit(&xs, &ys).0)
}
