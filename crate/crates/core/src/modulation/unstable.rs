//! Unstable/stable coefficients a_± of ψ⃗ = φ⃗ + a₊Z₊ + a₋Z₋.
//!
//! The orthogonality conditions Ω(φ⃗, Z₋) = e^{μt}S̃(e^{−μt}F₊) and
//! Ω(φ⃗, Z₊) = e^{−μt}S̃(e^{μt}F₋) fix a_± at each time; they make
//! d/dt(e^{−μt}a₊) = −S(e^{−μt}F₊) and d/dt(e^{μt}a₋) = S(e^{μt}F₋).

use serde::Serialize;

use super::smoother::SampledSmoother;
use super::symplectic::{symplectic_form, FirstOrderState, SymplecticGrid};
use super::test_functions::TestFunctionSet;
use crate::error::{CatenoidError, Result};

/// Pairings of Z_± with their eigen-defects E₊ = MZ₊ − μZ₊, E₋ = MZ₋ + μZ₋.
#[derive(Debug, Clone)]
pub struct UnstablePairings {
    pub e_plus: FirstOrderState,
    pub e_minus: FirstOrderState,
    /// Ω(E₊, Z₋), Ω(E₋, Z₋), Ω(E₊, Z₊), Ω(E₋, Z₊).
    pub ep_zm: f64,
    pub em_zm: f64,
    pub ep_zp: f64,
    pub em_zp: f64,
}

impl UnstablePairings {
    pub fn new(grid: &SymplecticGrid, tf: &TestFunctionSet) -> Result<Self> {
        let (e_plus, e_minus) = tf.unstable_errors(grid)?;
        Ok(Self {
            ep_zm: symplectic_form(grid, &e_plus, &tf.z_minus)?,
            em_zm: symplectic_form(grid, &e_minus, &tf.z_minus)?,
            ep_zp: symplectic_form(grid, &e_plus, &tf.z_plus)?,
            em_zp: symplectic_form(grid, &e_minus, &tf.z_plus)?,
            e_plus,
            e_minus,
        })
    }
}

/// F_± for the linear flow (no nonlinear source F⃗₁):
/// F₊ = Ω(φ⃗, E₋) − a₊Ω(E₊, Z₋) − a₋Ω(E₋, Z₋),
/// F₋ = Ω(φ⃗, E₊) − a₊Ω(E₊, Z₊) − a₋Ω(E₋, Z₊),
/// with φ⃗ = ψ⃗ − a₊Z₊ − a₋Z₋.
pub fn aplus_aminus_rhs(
    grid: &SymplecticGrid,
    tf: &TestFunctionSet,
    pairings: &UnstablePairings,
    state: &FirstOrderState,
    a_plus: f64,
    a_minus: f64,
) -> Result<(f64, f64)> {
    let phi = state.axpy(-a_plus, &tf.z_plus).axpy(-a_minus, &tf.z_minus);
    let fp = symplectic_form(grid, &phi, &pairings.e_minus)? - a_plus * pairings.ep_zm - a_minus * pairings.em_zm;
    let fm = symplectic_form(grid, &phi, &pairings.e_plus)? - a_plus * pairings.ep_zp - a_minus * pairings.em_zp;
    Ok((fp, fm))
}

/// Causal bookkeeping of a_±, F_± and the trap quantity
/// q = μa₊ − e^{μt}S(e^{−μt}F₊) along a uniformly sampled run.
#[derive(Debug, Clone, Serialize)]
pub struct UnstableTracker {
    pub mu: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    /// S(e^{−μt}F₊) and S(e^{μt}F₋) at each sample.
    pub s_plus: Vec<f64>,
    pub s_minus: Vec<f64>,
    pub q: Vec<f64>,
    #[serde(skip)]
    smoother: SampledSmoother,
    #[serde(skip)]
    pairings: Option<UnstablePairings>,
}

impl UnstableTracker {
    pub fn new(grid: &SymplecticGrid, tf: &TestFunctionSet, smoother: SampledSmoother) -> Result<Self> {
        Ok(Self {
            mu: tf.mu,
            dt: smoother.dt,
            times: Vec::new(),
            a_plus: Vec::new(),
            a_minus: Vec::new(),
            f_plus: Vec::new(),
            f_minus: Vec::new(),
            s_plus: Vec::new(),
            s_minus: Vec::new(),
            q: Vec::new(),
            smoother,
            pairings: Some(UnstablePairings::new(grid, tf)?),
        })
    }

    /// e^{−μt_i}F₊(t_i) with F held at its initial value for t < 0.
    fn x_plus(&self, i: i64, current: f64) -> f64 {
        let f = if i < 0 { self.f_plus[0] } else if (i as usize) < self.f_plus.len() { self.f_plus[i as usize] } else { current };
        (-self.mu * i as f64 * self.dt).exp() * f
    }

    fn x_minus(&self, i: i64, current: f64) -> f64 {
        let f = if i < 0 { self.f_minus[0] } else if (i as usize) < self.f_minus.len() { self.f_minus[i as usize] } else { current };
        (self.mu * i as f64 * self.dt).exp() * f
    }

    /// Record the state at the next sample time (samples must be pushed in order).
    pub fn push(&mut self, grid: &SymplecticGrid, tf: &TestFunctionSet, state: &FirstOrderState) -> Result<()> {
        self.push_forced(grid, tf, state, None)
    }

    /// As `push`, for a flow ψ⃗̇ = Mψ⃗ + N with an extra source N; the source
    /// enters as F₊ ↦ F₊ − Ω(N, Z₋) and F₋ ↦ F₋ − Ω(N, Z₊).
    pub fn push_forced(
        &mut self,
        grid: &SymplecticGrid,
        tf: &TestFunctionSet,
        state: &FirstOrderState,
        source: Option<&FirstOrderState>,
    ) -> Result<()> {
        let pairings = self.pairings.as_ref().ok_or(CatenoidError::ModulationSingular)?;
        let k = self.times.len();
        let t = k as f64 * self.dt;
        if (state.time - t).abs() > 1e-9 * (1.0 + t) {
            return Err(CatenoidError::HistoryError(state.time));
        }
        let mu = self.mu;
        let ep = (mu * t).exp();
        let em = (-mu * t).exp();
        // F_± are affine in (a₊, a₋): F = P + α·a
        let (mut p_plus, mut p_minus) = aplus_aminus_rhs(grid, tf, pairings, state, 0.0, 0.0)?;
        let (fp1, fm1) = aplus_aminus_rhs(grid, tf, pairings, state, 1.0, 0.0)?;
        let (fp2, fm2) = aplus_aminus_rhs(grid, tf, pairings, state, 0.0, 1.0)?;
        let (app, apm, amp, amm) = (fp1 - p_plus, fp2 - p_plus, fm1 - p_minus, fm2 - p_minus);
        if let Some(n) = source {
            p_plus -= symplectic_form(grid, n, &tf.z_minus)?;
            p_minus -= symplectic_form(grid, n, &tf.z_plus)?;
        }
        // S̃ contributions: known history plus g·(current X) for the unknown sample
        let (g_plus, g_minus, h_plus, h_minus) = if k == 0 {
            // whole window is the held initial value: X₊(−r) = e^{μr}F₊(0)
            let gp: f64 = self.smoother.st_weights.iter().enumerate().map(|(j, w)| w * (mu * j as f64 * self.dt).exp()).sum();
            let gm: f64 = self.smoother.st_weights.iter().enumerate().map(|(j, w)| w * (-mu * j as f64 * self.dt).exp()).sum();
            (gp, gm, 0.0, 0.0)
        } else {
            let g = self.smoother.current_weight();
            let hp: f64 = self.smoother.st_weights.iter().enumerate().skip(1).map(|(j, w)| w * self.x_plus(k as i64 - j as i64, 0.0)).sum();
            let hm: f64 = self.smoother.st_weights.iter().enumerate().skip(1).map(|(j, w)| w * self.x_minus(k as i64 - j as i64, 0.0)).sum();
            (g * em, g * ep, hp, hm)
        };
        // a₊ = Ω(ψ,Z₋) − e^{μt}(h₊ + g₊F₊),  a₋ = e^{−μt}(h₋ + g₋F₋) − Ω(ψ,Z₊)
        let big_a = symplectic_form(grid, state, &tf.z_minus)?;
        let big_b = symplectic_form(grid, state, &tf.z_plus)?;
        let gp = ep * g_plus;
        let gm = em * g_minus;
        let m11 = 1.0 + gp * app;
        let m12 = gp * apm;
        let m21 = -gm * amp;
        let m22 = 1.0 - gm * amm;
        let r1 = big_a - ep * h_plus - gp * p_plus;
        let r2 = em * h_minus + gm * p_minus - big_b;
        let det = m11 * m22 - m12 * m21;
        if det.abs() < 1e-14 {
            return Err(CatenoidError::ModulationSingular);
        }
        let a_plus = (r1 * m22 - m12 * r2) / det;
        let a_minus = (m11 * r2 - m21 * r1) / det;
        let f_plus = p_plus + app * a_plus + apm * a_minus;
        let f_minus = p_minus + amp * a_plus + amm * a_minus;
        self.times.push(t);
        self.a_plus.push(a_plus);
        self.a_minus.push(a_minus);
        self.f_plus.push(f_plus);
        self.f_minus.push(f_minus);
        let (sp, _) = self.smoother.apply_with(|i| self.x_plus(i, f_plus), k);
        let (sm, _) = self.smoother.apply_with(|i| self.x_minus(i, f_minus), k);
        self.s_plus.push(sp);
        self.s_minus.push(sm);
        self.q.push(mu * a_plus - ep * sp);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrate d/dt(e^{−μt}a₊) = −S₊ and d/dt(e^{μt}a₋) = S₋ with the
/// trapezoid rule from sampled right-hand sides S₊ = S(e^{−μt}F₊), S₋ = S(e^{μt}F₋).
pub fn integrate_unstable_odes(a0: (f64, f64), s_plus: &[f64], s_minus: &[f64], mu: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let len = s_plus.len().min(s_minus.len());
    let mut ap = Vec::with_capacity(len);
    let mut am = Vec::with_capacity(len);
    let (mut ip, mut im) = (0.0, 0.0);
    for k in 0..len {
        if k > 0 {
            ip += 0.5 * dt * (s_plus[k] + s_plus[k - 1]);
            im += 0.5 * dt * (s_minus[k] + s_minus[k - 1]);
        }
        let t = k as f64 * dt;
        ap.push((mu * t).exp() * (a0.0 - ip));
        am.push((-mu * t).exp() * (a0.1 + im));
    }
    (ap, am)
}
