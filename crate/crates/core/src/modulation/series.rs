//! Linear-backend modulation: evolve ψ⃗ by ∂_tψ⃗ = Mψ⃗ + K⃗(℘̇) and choose
//! ℘̇ = (ℓ̇, ξ̇ − ℓ) so that 𝛀 = Ϋ + ω⃗ with Ϋ = S̃N⃗ at every sample.
//!
//! Here 𝛀_k = Ω(ψ⃗, Z_k), N_k = Ω(ψ⃗, MZ_k), and
//! K⃗ = −Σ(ξ̇−ℓ)_iφ⃗_i − Σℓ̇_iφ⃗_{n+i}. At linear order F⃗_ω = 0, so ω⃗ stays 0;
//! the exact exponential update is kept for general sources.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::smoother::SampledSmoother;
use super::symplectic::{matrix_operator_apply, rk4_step, symplectic_form, FirstOrderState, Sector, SymplecticGrid};
use super::test_functions::{kernel_states, TestFunctionSet};
use super::unstable::UnstableTracker;
use crate::error::{CatenoidError, Result};

/// ω⃗ one step forward under ω̇ = −βω − s with the source s held over the step.
pub fn omega_step(omega: f64, source: f64, beta: f64, dt: f64) -> f64 {
    let decay = (-beta * dt).exp();
    omega * decay - source * (1.0 - decay) / beta
}

/// Explicit linear-backend formula ℘̇ = Block^{−1}(SN⃗ − βω⃗).
pub fn modulation_rhs(block: &DMatrix<f64>, s_n: &[f64], omega: &[f64], beta: f64) -> Result<Vec<f64>> {
    let rhs = DVector::from_iterator(s_n.len(), s_n.iter().zip(omega).map(|(s, w)| s - beta * w));
    let lu = block.clone().lu();
    let sol = lu.solve(&rhs).ok_or(CatenoidError::ModulationSingular)?;
    Ok(sol.iter().copied().collect())
}

/// Radial part plus one state per coordinate harmonic Θ^i.
#[derive(Debug, Clone, Serialize)]
pub struct ModulatedState {
    pub radial: FirstOrderState,
    pub coords: Vec<FirstOrderState>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModulationConfig {
    pub beta: f64,
    pub horizon: f64,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self { beta: 1.0, horizon: 5.0 }
    }
}

/// Stored time series of a modulated run.
#[derive(Debug, Clone, Serialize)]
pub struct ModulationSeries {
    pub times: Vec<f64>,
    /// 𝛀_1…𝛀_{2n}.
    pub omega_k: Vec<Vec<f64>>,
    /// Ϋ = S̃N⃗.
    pub upomega: Vec<Vec<f64>>,
    pub omega_vec: Vec<Vec<f64>>,
    pub n_vec: Vec<Vec<f64>>,
    /// ℘̇ = (ℓ̇, ξ̇ − ℓ) used on [t_k, t_{k+1}].
    pub p_dot: Vec<Vec<f64>>,
    /// Block^{−1}(SN⃗ − βω⃗) at t_k, for comparison.
    pub p_dot_explicit: Vec<Vec<f64>>,
    pub ell: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub beta: f64,
}

impl ModulationSeries {
    /// max over samples of |𝛀 − Ϋ − ω⃗|.
    pub fn bookkeeping_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.times.len() {
            for j in 0..self.omega_k[k].len() {
                worst = worst.max((self.omega_k[k][j] - self.upomega[k][j] - self.omega_vec[k][j]).abs());
            }
        }
        worst
    }
}

struct Pairer<'a> {
    grid: &'a SymplecticGrid,
    tf: &'a TestFunctionSet,
    mz: Vec<FirstOrderState>,
}

impl Pairer<'_> {
    /// (𝛀_i, 𝛀_{n+i}) and (N_i, N_{n+i}) of a coordinate-sector state.
    fn pair(&self, i: usize, u: &FirstOrderState) -> Result<([f64; 2], [f64; 2])> {
        let n = self.grid.n;
        Ok((
            [symplectic_form(self.grid, u, &self.tf.z[i])?, symplectic_form(self.grid, u, &self.tf.z[n + i])?],
            [symplectic_form(self.grid, u, &self.mz[i])?, symplectic_form(self.grid, u, &self.mz[n + i])?],
        ))
    }
}

fn solve2(m: [[f64; 2]; 2], r: [f64; 2]) -> Result<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(det.abs() > 1e-14 * scale * scale) {
        return Err(CatenoidError::ModulationSingular);
    }
    Ok([(r[0] * m[1][1] - m[0][1] * r[1]) / det, (m[0][0] * r[1] - m[1][0] * r[0]) / det])
}

/// Evolve a modulated state. Initial data are first corrected by kernel
/// directions (a shift of ξ(0), ℓ(0)) so that 𝛀(0) = Ϋ(0).
pub fn run_modulated_linear(
    grid: &SymplecticGrid,
    tf: &TestFunctionSet,
    smoother: &SampledSmoother,
    initial: &ModulatedState,
    config: ModulationConfig,
) -> Result<(ModulationSeries, ModulatedState)> {
    let n = grid.n;
    if initial.coords.len() != n {
        return Err(CatenoidError::InvalidParameter(format!("need {n} coordinate sectors, got {}", initial.coords.len())));
    }
    if !(config.beta > 0.0) {
        return Err(CatenoidError::InvalidParameter(format!("damping beta = {}", config.beta)));
    }
    let dt = smoother.dt;
    let steps = (config.horizon / dt).round() as usize;
    let mz = tf.z.iter().map(|z| matrix_operator_apply(grid, &[], z)).collect::<Result<Vec<_>>>()?;
    let pairer = Pairer { grid, tf, mz };
    let kernel = kernel_states(grid);
    let block = tf.modulation_block(grid);
    let wt0 = smoother.current_weight();
    let hold = smoother.constant_history_factor();

    // initial correction: u ← u + α₁φ⃗_i + α₂φ⃗_{n+i} with 𝛀 − hold·N = 0
    let mut coords = Vec::with_capacity(n);
    for i in 0..n {
        let u = &initial.coords[i];
        if u.sector != Sector::Coordinate(i) {
            return Err(CatenoidError::InvalidParameter(format!("coordinate state {i} has sector {:?}", u.sector)));
        }
        let (o, nn) = pairer.pair(i, u)?;
        let (o1, n1) = pairer.pair(i, &kernel[i])?;
        let (o2, n2) = pairer.pair(i, &kernel[n + i])?;
        let m = [[o1[0] - hold * n1[0], o2[0] - hold * n2[0]], [o1[1] - hold * n1[1], o2[1] - hold * n2[1]]];
        let alpha = solve2(m, [-(o[0] - hold * nn[0]), -(o[1] - hold * nn[1])])?;
        let mut v = u.axpy(alpha[0], &kernel[i]).axpy(alpha[1], &kernel[n + i]);
        v.time = 0.0;
        coords.push(v);
    }
    let mut radial = initial.radial.clone();
    radial.time = 0.0;

    let mut tracker = UnstableTracker::new(grid, tf, smoother.clone())?;
    let mut series = ModulationSeries {
        times: Vec::new(),
        omega_k: Vec::new(),
        upomega: Vec::new(),
        omega_vec: Vec::new(),
        n_vec: Vec::new(),
        p_dot: Vec::new(),
        p_dot_explicit: Vec::new(),
        ell: Vec::new(),
        xi: Vec::new(),
        a_plus: Vec::new(),
        a_minus: Vec::new(),
        beta: config.beta,
    };
    // N history per component, held constant before t = 0
    let mut n_hist: Vec<Vec<f64>> = vec![Vec::new(); 2 * n];
    let mut omega_vec = vec![0.0; 2 * n];
    let mut ell = vec![0.0; n];
    let mut xi = vec![0.0; n];

    let record = |series: &mut ModulationSeries,
                  n_hist: &mut Vec<Vec<f64>>,
                  coords: &[FirstOrderState],
                  omega_vec: &[f64],
                  ell: &[f64],
                  xi: &[f64],
                  t: f64|
     -> Result<()> {
        let mut om = vec![0.0; 2 * n];
        let mut nv = vec![0.0; 2 * n];
        for i in 0..n {
            let (o, nn) = pairer.pair(i, &coords[i])?;
            om[i] = o[0];
            om[n + i] = o[1];
            nv[i] = nn[0];
            nv[n + i] = nn[1];
        }
        let k = series.times.len();
        let mut up = vec![0.0; 2 * n];
        let mut sn = vec![0.0; 2 * n];
        for j in 0..2 * n {
            n_hist[j].push(nv[j]);
            let (s, st) = smoother.apply(&n_hist[j], k)?;
            up[j] = st;
            sn[j] = s;
        }
        series.times.push(t);
        series.omega_k.push(om);
        series.upomega.push(up);
        series.omega_vec.push(omega_vec.to_vec());
        series.n_vec.push(nv);
        series.p_dot_explicit.push(modulation_rhs(&block, &sn, omega_vec, config.beta)?);
        series.ell.push(ell.to_vec());
        series.xi.push(xi.to_vec());
        Ok(())
    };

    record(&mut series, &mut n_hist, &coords, &omega_vec, &ell, &xi, 0.0)?;
    tracker.push(grid, tf, &radial)?;

    for step in 0..steps {
        let k1 = step + 1;
        let t1 = k1 as f64 * dt;
        // F⃗_ω = 0 at linear order
        let omega_next: Vec<f64> = omega_vec.iter().map(|w| omega_step(*w, 0.0, config.beta, dt)).collect();
        let mut p = vec![0.0; 2 * n];
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let u = &coords[i];
            // affine response of one RK4 step to (ℓ̇_i, ξ̇_i − ℓ_i)
            let base = rk4_step(grid, u, None, dt)?;
            let f_ldot = kernel[n + i].scaled(-1.0);
            let f_xdot = kernel[i].scaled(-1.0);
            let zero = FirstOrderState::zeros(u.len(), u.sector);
            let r_ldot = rk4_step(grid, &zero, Some(&f_ldot), dt)?;
            let r_xdot = rk4_step(grid, &zero, Some(&f_xdot), dt)?;
            // history part of S̃N at t_{k+1} (all lags except the current sample)
            let mut hist = [0.0; 2];
            for (c, j) in [(0usize, i), (1usize, n + i)] {
                let h = &n_hist[j];
                hist[c] = smoother
                    .st_weights
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(lag, w)| w * h[(k1 as i64 - lag as i64).max(0) as usize])
                    .sum();
            }
            let (ob, nb) = pairer.pair(i, &base)?;
            let (ol, nl) = pairer.pair(i, &r_ldot)?;
            let (ox, nx) = pairer.pair(i, &r_xdot)?;
            let target = [omega_next[i], omega_next[n + i]];
            let m = [[ol[0] - wt0 * nl[0], ox[0] - wt0 * nx[0]], [ol[1] - wt0 * nl[1], ox[1] - wt0 * nx[1]]];
            let r = [target[0] + hist[0] - (ob[0] - wt0 * nb[0]), target[1] + hist[1] - (ob[1] - wt0 * nb[1])];
            let sol = solve2(m, r)?;
            p[i] = sol[0];
            p[n + i] = sol[1];
            let mut v = base.axpy(sol[0], &r_ldot).axpy(sol[1], &r_xdot);
            v.time = t1;
            if !v.is_finite() {
                return Err(CatenoidError::NumericalBlowup { step: k1 });
            }
            next.push(v);
        }
        radial = rk4_step(grid, &radial, None, dt)?;
        radial.time = t1;
        for i in 0..n {
            xi[i] += dt * (ell[i] + 0.5 * dt * p[i] + p[n + i]);
            ell[i] += dt * p[i];
        }
        coords = next;
        omega_vec = omega_next;
        series.p_dot.push(p);
        record(&mut series, &mut n_hist, &coords, &omega_vec, &ell, &xi, t1)?;
        tracker.push(grid, tf, &radial)?;
    }
    series.a_plus = tracker.a_plus.clone();
    series.a_minus = tracker.a_minus.clone();
    Ok((series, ModulatedState { radial, coords }))
}
