//! Norms of radial and single-sector states on flat time slices — energy,
//! local energy and its dual, r^p flux/bulk energies — and power-law decay fits.
//!
//! States live on the node layout of a [`SectorOperator`]. Angular integrals are
//! taken against a harmonic normalized to mean square one, so every density is
//! multiplied by |S^{n−1}|, and half-line layouts are doubled by symmetry.

use serde::{Deserialize, Serialize};

use crate::error::{CatenoidError, Result};
use crate::evolution::{BoundaryCondition, BumpSpec, EvolutionConfig, Integrator, LinearEvolver, LinearState};
use crate::geometry::{flux_coeff_at, g_rr_at, jap, solve_profile, volume_weight_at};
use crate::modulation::symplectic::sphere_area;
use crate::quadrature::{linear_fit, trapezoid};
use crate::spectrum::{project_continuous, radial_spectrum, Parity, SectorOperator};

/// Split radius R̃, LE weight exponent α and r^p exponent p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    pub r_split: f64,
    pub alpha: f64,
    pub p: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { r_split: 10.0, alpha: 0.1, p: 1.0 }
    }
}

impl NormConfig {
    pub fn new(r_split: f64, alpha: f64, p: f64) -> Result<Self> {
        if !(r_split > 0.0) {
            return Err(CatenoidError::InvalidParameter(format!("split radius {r_split}")));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(CatenoidError::InvalidParameter(format!("alpha {alpha} outside (0, 0.5)")));
        }
        if !(0.0..=2.0).contains(&p) {
            return Err(CatenoidError::InvalidParameter(format!("p {p} outside [0, 2]")));
        }
        Ok(Self { r_split, alpha, p })
    }

    /// Exterior cutoff χ_{≥R̃}: 0 below R̃, 1 above 2R̃, C¹ smoothstep between.
    pub fn exterior_cutoff(&self, rho: f64) -> f64 {
        let s = ((rho.abs() - self.r_split) / self.r_split).clamp(0.0, 1.0);
        s * s * (3.0 - 2.0 * s)
    }
}

fn layout_factor(op: &SectorOperator) -> f64 {
    let halves = if op.parity == Parity::Full { 1.0 } else { 2.0 };
    halves * sphere_area(op.n)
}

fn angular_eigenvalue(op: &SectorOperator) -> f64 {
    let k = op.harmonic_index as f64;
    k * (k + op.n as f64 - 2.0)
}

fn check_len(op: &SectorOperator, u: &[f64]) -> Result<()> {
    if u.len() != op.len() {
        return Err(CatenoidError::GridError(format!("{} samples on a layout of {}", u.len(), op.len())));
    }
    Ok(())
}

/// Centered ∂_ρ at the nodes, with the layout's boundary values (zero at the
/// Dirichlet ends, mirror symmetry at an even center node).
pub fn radial_derivative(op: &SectorOperator, u: &[f64]) -> Vec<f64> {
    let m = u.len();
    let h = op.h;
    (0..m)
        .map(|i| {
            let right = if i + 1 < m { u[i + 1] } else { 0.0 };
            let left = if i > 0 {
                u[i - 1]
            } else {
                match op.parity {
                    Parity::Even => u[1.min(m - 1)],
                    _ => 0.0,
                }
            };
            (right - left) / (2.0 * h)
        })
        .collect()
}

/// Energy on a flat slice: ∫ (ψ_t² + |∇ψ|² + ⟨ρ⟩^{−2}ψ²) dV.
///
/// The gradient term uses the same flux form as the stability operator, so
/// E = ‖ψ_t‖² − ⟨ψ, Hψ⟩ + ∫ (|II|² + ⟨ρ⟩^{−2}) ψ² holds exactly on the grid.
pub fn energy_e(op: &SectorOperator, psi: &[f64], psi_t: &[f64]) -> Result<f64> {
    check_len(op, psi)?;
    check_len(op, psi_t)?;
    let m = op.len();
    let lam = angular_eigenvalue(op);
    let mut nodal = 0.0;
    for i in 0..m {
        let q = (1.0 + lam) / (1.0 + op.nodes[i] * op.nodes[i]);
        nodal += op.weights[i] * (psi_t[i] * psi_t[i] + q * psi[i] * psi[i]);
    }
    let mut grad: f64 = (0..m.saturating_sub(1)).map(|i| op.flux[i] * (psi[i + 1] - psi[i]).powi(2)).sum();
    let edge = |r: f64| flux_coeff_at(op.n, r) / op.h;
    grad += edge(op.nodes[m - 1] + 0.5 * op.h) * psi[m - 1] * psi[m - 1];
    if op.parity != Parity::Even {
        grad += edge(op.nodes[0] - 0.5 * op.h) * psi[0] * psi[0];
    }
    Ok(layout_factor(op) * (nodal + grad))
}

/// Pieces of the local energy density on one slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergyDensity {
    /// χ_≤ (∂_ρψ)²
    pub radial: f64,
    /// χ_≤ ((ρψ)² + ρ²|∂ψ|²): degenerate at the neck
    pub degenerate: f64,
    /// χ_≥ (r^{−3−α}ψ² + r^{−1−α}|∂ψ|²)
    pub exterior: f64,
}

impl LocalEnergyDensity {
    pub fn total(&self) -> f64 {
        self.radial + self.degenerate + self.exterior
    }
}

/// Spatial integral of the LE integrand on one slice (r = ⟨ρ⟩).
pub fn local_energy_density(op: &SectorOperator, psi: &[f64], psi_t: &[f64], cfg: &NormConfig) -> Result<LocalEnergyDensity> {
    check_len(op, psi)?;
    check_len(op, psi_t)?;
    let d = radial_derivative(op, psi);
    let lam = angular_eigenvalue(op);
    let f = layout_factor(op);
    let mut out = LocalEnergyDensity { radial: 0.0, degenerate: 0.0, exterior: 0.0 };
    for i in 0..op.len() {
        let rho = op.nodes[i];
        let r = jap(rho);
        let grad2 = psi_t[i].powi(2) + d[i].powi(2) / g_rr_at(op.n, rho) + lam * (psi[i] / r).powi(2);
        let chi = cfg.exterior_cutoff(rho);
        let w = f * op.weights[i];
        out.radial += w * (1.0 - chi) * d[i].powi(2);
        out.degenerate += w * (1.0 - chi) * rho * rho * (psi[i].powi(2) + grad2);
        out.exterior += w * chi * (r.powf(-3.0 - cfg.alpha) * psi[i].powi(2) + r.powf(-1.0 - cfg.alpha) * grad2);
    }
    Ok(out)
}

/// Spatial integral of the LE* integrand χ_≤ f² + χ_≥ r^{1+α} f².
pub fn dual_energy_density(op: &SectorOperator, f: &[f64], cfg: &NormConfig) -> Result<f64> {
    check_len(op, f)?;
    let lf = layout_factor(op);
    Ok((0..op.len())
        .map(|i| {
            let chi = cfg.exterior_cutoff(op.nodes[i]);
            lf * op.weights[i] * f[i].powi(2) * ((1.0 - chi) + chi * jap(op.nodes[i]).powf(1.0 + cfg.alpha))
        })
        .sum())
}

/// One time sample of a run: (t, ψ, ∂_tψ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub time: f64,
    pub psi: Vec<f64>,
    pub psi_t: Vec<f64>,
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(CatenoidError::InvalidParameter("need at least two time samples".into()));
    }
    let dt = times[1] - times[0];
    let ok = dt > 0.0 && times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(1.0));
    if !ok {
        return Err(CatenoidError::InvalidParameter("time samples must be uniform and increasing".into()));
    }
    Ok(dt)
}

/// ‖ψ‖²_LE over the space-time slab covered by `slices` (trapezoid in time).
pub fn local_energy_le(op: &SectorOperator, slices: &[Slice], cfg: &NormConfig) -> Result<f64> {
    let times: Vec<f64> = slices.iter().map(|s| s.time).collect();
    let dt = uniform_step(&times)?;
    let dens = slices
        .iter()
        .map(|s| local_energy_density(op, &s.psi, &s.psi_t, cfg).map(|d| d.total()))
        .collect::<Result<Vec<_>>>()?;
    Ok(trapezoid(&dens, dt))
}

/// ‖f‖²_{LE*} over the slab covered by `sources` sampled at `times`.
pub fn local_energy_dual(op: &SectorOperator, times: &[f64], sources: &[Vec<f64>], cfg: &NormConfig) -> Result<f64> {
    let dt = uniform_step(times)?;
    if sources.len() != times.len() {
        return Err(CatenoidError::InvalidParameter("one source sample per time".into()));
    }
    let dens = sources.iter().map(|f| dual_energy_density(op, f, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(trapezoid(&dens, dt))
}

/// Null direction used to differentiate ψ̃ = r^{(n−1)/2}ψ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullDirection {
    /// L = ∂_t + ∂_r, the good derivative.
    Outgoing,
    /// L̄ = ∂_t − ∂_r.
    Incoming,
}

/// r^p flux ℰ^p and the spatial bulk integrand whose time integral is ℬ^p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpEnergy {
    pub p: f64,
    pub flux: f64,
    pub bulk_rate: f64,
}

/// r^p energies with the stationary frame of a flat-slice radial run:
/// r̃ = r = ⟨ρ⟩, ∂_r = (⟨ρ⟩/ρ)∂_ρ on each end.
pub fn rp_energy(op: &SectorOperator, psi: &[f64], psi_t: &[f64], p: f64, cfg: &NormConfig) -> Result<RpEnergy> {
    rp_energy_along(op, psi, psi_t, p, cfg, NullDirection::Outgoing)
}

pub fn rp_energy_along(
    op: &SectorOperator,
    psi: &[f64],
    psi_t: &[f64],
    p: f64,
    cfg: &NormConfig,
    dir: NullDirection,
) -> Result<RpEnergy> {
    check_len(op, psi)?;
    check_len(op, psi_t)?;
    if !(0.0..=2.0).contains(&p) {
        return Err(CatenoidError::InvalidParameter(format!("p {p} outside [0, 2]")));
    }
    let n = op.n as f64;
    let half = 0.5 * (n - 1.0);
    let d = radial_derivative(op, psi);
    let lam = angular_eigenvalue(op);
    let sign = if dir == NullDirection::Outgoing { 1.0 } else { -1.0 };
    let lf = layout_factor(op);
    let (mut flux, mut bulk) = (0.0, 0.0);
    for i in 0..op.len() {
        let rho = op.nodes[i];
        let chi = cfg.exterior_cutoff(rho);
        if chi == 0.0 {
            continue;
        }
        let r = jap(rho);
        // dθ dr in terms of the line weight h (halved at a symmetric center)
        let dr = op.weights[i] / volume_weight_at(op.n, rho) * rho.abs() / r;
        let dpsi_dr = d[i] * r / rho.abs() * rho.signum();
        let tilde = r.powf(half) * psi[i];
        let l_tilde = r.powf(half) * (psi_t[i] + sign * (dpsi_dr + half * psi[i] / r));
        flux += lf * dr * chi * r.powf(p) * l_tilde * l_tilde;
        bulk += lf * dr * chi * r.powf(p - 1.0) * (l_tilde * l_tilde + (2.0 - p) / (r * r) * (1.0 + lam) * tilde * tilde);
    }
    Ok(RpEnergy { p, flux, bulk_rate: bulk })
}

/// ℬ^p(t₁, t₂) by trapezoid in time over `slices`.
pub fn rp_bulk(op: &SectorOperator, slices: &[Slice], p: f64, cfg: &NormConfig) -> Result<f64> {
    let times: Vec<f64> = slices.iter().map(|s| s.time).collect();
    let dt = uniform_step(&times)?;
    let rates = slices
        .iter()
        .map(|s| rp_energy(op, &s.psi, &s.psi_t, p, cfg).map(|e| e.bulk_rate))
        .collect::<Result<Vec<_>>>()?;
    Ok(trapezoid(&rates, dt))
}

/// sup |ψ| over |ρ| ≤ radius.
pub fn interior_sup(op: &SectorOperator, psi: &[f64], radius: f64) -> f64 {
    op.nodes.iter().zip(psi).filter(|(r, _)| r.abs() <= radius).fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// Log–log least-squares fit of a positive series on a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: [f64; 2],
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS residual of ln(value) about the fitted line.
    pub residual: f64,
    pub samples: usize,
}

impl DecayFit {
    /// log₁₀(t₂/t₁).
    pub fn decades(&self) -> f64 {
        (self.window[1] / self.window[0]).log10()
    }

    pub fn spans_decade(&self) -> bool {
        self.decades() >= 1.0
    }
}

/// Residual above which a series is not treated as a power law.
pub const POWER_LAW_RESIDUAL: f64 = 0.25;

pub fn fit_decay(times: &[f64], values: &[f64], window: [f64; 2]) -> Result<DecayFit> {
    fit_decay_with(times, values, window, POWER_LAW_RESIDUAL)
}

pub fn fit_decay_with(times: &[f64], values: &[f64], window: [f64; 2], max_residual: f64) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(CatenoidError::FitError("times and values differ in length".into()));
    }
    if !(window[0] > 0.0 && window[1] > window[0]) {
        return Err(CatenoidError::FitError(format!("bad window {window:?}")));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&t, &v) in times.iter().zip(values) {
        if t < window[0] || t > window[1] {
            continue;
        }
        if !(v > 0.0) {
            return Err(CatenoidError::FitError(format!("non-positive sample {v} at t = {t}")));
        }
        x.push(t.ln());
        y.push(v.ln());
    }
    if x.len() < 3 {
        return Err(CatenoidError::FitError(format!("{} samples in window", x.len())));
    }
    let (slope, icpt, rms) = linear_fit(&x, &y);
    if rms > max_residual {
        return Err(CatenoidError::FitError(format!("non-power-law: residual {rms:.3e}")));
    }
    Ok(DecayFit { window, exponent: slope, prefactor: icpt.exp(), residual: rms, samples: x.len() })
}

/// One row of a run's diagnostic time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub time: f64,
    pub energy: f64,
    /// LE density integrated over this slice only; sum with dt for a window.
    pub local_energy: f64,
    pub rp: [f64; 3],
    pub sup: f64,
    /// Ω-pairings with the modulation test functions, when tracked.
    pub projections: Vec<f64>,
    pub a_plus: Option<f64>,
    pub a_minus: Option<f64>,
}

impl DiagnosticRow {
    pub fn measure(op: &SectorOperator, slice: &Slice, cfg: &NormConfig, sup_radius: f64) -> Result<Self> {
        let rp = |p| rp_energy(op, &slice.psi, &slice.psi_t, p, cfg).map(|e| e.flux);
        Ok(Self {
            time: slice.time,
            energy: energy_e(op, &slice.psi, &slice.psi_t)?,
            local_energy: local_energy_density(op, &slice.psi, &slice.psi_t, cfg)?.total(),
            rp: [rp(0.0)?, rp(1.0)?, rp(2.0)?],
            sup: interior_sup(op, &slice.psi, sup_radius),
            projections: Vec::new(),
            a_plus: None,
            a_minus: None,
        })
    }
}

/// Time series of diagnostics plus a free-form manifest of the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub manifest: Vec<(String, String)>,
    pub rows: Vec<DiagnosticRow>,
    pub fits: Vec<DecayFit>,
}

impl RunRecord {
    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.manifest.push((key.to_string(), value.to_string()));
    }

    pub fn column(&self, pick: impl Fn(&DiagnosticRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(pick).collect()
    }

    pub fn fit(&mut self, pick: impl Fn(&DiagnosticRow) -> f64, window: [f64; 2]) -> Result<DecayFit> {
        let fit = fit_decay(&self.column(|r| r.time), &self.column(pick), window)?;
        self.fits.push(fit);
        Ok(fit)
    }
}

/// Linear radial run on the continuous spectrum used to measure interior decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRunConfig {
    pub n: usize,
    pub rho_max: f64,
    pub intervals: usize,
    pub cfl: f64,
    pub horizon: f64,
    pub bump: BumpSpec,
    /// Sup-norm is taken over |ρ| ≤ this radius.
    pub sup_radius: f64,
    /// Diagnostics are recorded every this many time units.
    pub sample_every: f64,
    pub window: [f64; 2],
    /// Residual cap for the sup-norm fit. Local decay of radial waves in odd
    /// dimension is faster than any power until it reaches the grid-dispersion
    /// floor, so the slope is reported whatever the residual.
    pub max_residual: f64,
    pub norms: NormConfig,
}

impl Default for DecayRunConfig {
    fn default() -> Self {
        Self {
            n: 5,
            rho_max: 80.0,
            intervals: 4096,
            cfl: 0.5,
            horizon: 60.0,
            bump: BumpSpec::default(),
            sup_radius: 5.0,
            sample_every: 0.25,
            window: [10.0, 60.0],
            max_residual: f64::INFINITY,
            norms: NormConfig::default(),
        }
    }
}

/// Leapfrog + Dirichlet run of P_c-projected bump data; the decay fit of the
/// interior sup-norm over `window` is appended to `fits` when it succeeds.
/// The fit outcome itself is returned separately so a failed fit still yields the series.
pub fn linear_decay_run(cfg: &DecayRunConfig) -> Result<(RunRecord, Result<DecayFit>)> {
    let geom = solve_profile(cfg.n, cfg.rho_max, cfg.intervals)?;
    let evo = EvolutionConfig {
        n: cfg.n,
        rho_max: cfg.rho_max,
        intervals: cfg.intervals,
        cfl: cfg.cfl,
        horizon: cfg.horizon,
        data_support: cfg.bump.support_radius(),
        ..EvolutionConfig::default()
    };
    evo.validate(&geom)?;
    let spec = radial_spectrum(&geom, Parity::Even)?;
    let dt = evo.dt(&geom);
    let ev = LinearEvolver::new(&spec.op, dt, Integrator::Leapfrog, BoundaryCondition::Dirichlet)?
        .with_projection(&spec.bound_states);
    let raw: Vec<f64> = spec.op.nodes.iter().map(|&r| cfg.bump.profile(r)).collect();
    let data = project_continuous(&raw, &spec.op, &spec.bound_states)?;
    let raw_dt: Vec<f64> = spec.op.nodes.iter().map(|&r| cfg.bump.amp_dt * cfg.bump.profile(r)).collect();
    let data_dt = project_continuous(&raw_dt, &spec.op, &spec.bound_states)?;
    let scaled: Vec<f64> = data.iter().map(|v| cfg.bump.amp_psi * v).collect();
    let every = ((cfg.sample_every / dt).round() as usize).max(1);
    let mut record = RunRecord::default();
    record.note("n", cfg.n);
    record.note("rho_max", cfg.rho_max);
    record.note("intervals", cfg.intervals);
    record.note("dt", dt);
    record.note("mu_sq", spec.mu_sq);
    record.note("sup_radius", cfg.sup_radius);
    let mut k = 0usize;
    let mut failure = None;
    ev.run(&LinearState::new(scaled, data_dt), cfg.horizon, |s| {
        if k.is_multiple_of(every) && failure.is_none() {
            let slice = Slice { time: k as f64 * dt, psi: s.psi.clone(), psi_t: s.dt_psi.clone() };
            match DiagnosticRow::measure(&spec.op, &slice, &cfg.norms, cfg.sup_radius) {
                Ok(row) => record.rows.push(row),
                Err(e) => failure = Some(e),
            }
        }
        k += 1;
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let fit = fit_decay_with(&record.column(|r| r.time), &record.column(|r| r.sup), cfg.window, cfg.max_residual);
    if let Ok(f) = &fit {
        record.fits.push(*f);
    }
    Ok((record, fit))
}
