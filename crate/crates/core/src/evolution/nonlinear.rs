//! Rotationally symmetric flow in normal gauge, derived from the discrete area.
//!
//! The profile curve c(ρ) = (⟨ρ⟩, z(ρ)) is moved to c + ψν with ν its unit
//! normal. Per unit solid angle and time the area density is
//! A√(X − Gψ_t²) with
//!
//!   A = (⟨ρ⟩ + ψ⟨ρ⟩^{1−n})^{n−1},  G = g(1 + λ₁ψ)²,  X = G + D²,
//!
//! where g = g_ρρ, λ₁ = −(n−1)⟨ρ⟩^{−n} and D² is the flux-weighted nodal
//! discretization of ψ_ρ². The Lagrangian is L = −Σ c_i A_i√(X_i − G_iψ̇_i²)
//! (c_i the even-layout cell widths); its quadratic part is exactly the
//! radial sector operator. Everything is evaluated as an excess over the
//! catenoid with σ = ψ⟨ρ⟩^{−n} so that ψ = 0 is an exact critical point.

use serde::Serialize;

use super::BreakdownReport;
use crate::error::{CatenoidError, Result};
use crate::geometry::{self, jap, CatenoidGeometry};
use crate::modulation::{FirstOrderState, Sector};
use crate::spectrum::{assemble_operator, Parity, SectorOperator};

/// Threshold on −det of the (t, ρ) metric block and on X below which we stop.
pub const BREAKDOWN_FLOOR: f64 = 1e-10;

fn sqrt1pm1(x: f64) -> f64 {
    x / (1.0 + (1.0 + x).sqrt())
}

/// (1+a)(1+b)(1+c) − 1 without forming the product.
fn product_excess(a: f64, b: f64, c: f64) -> f64 {
    a + b + c + a * b + a * c + b * c + a * b * c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearState {
    pub time: f64,
    pub psi: Vec<f64>,
    /// Canonical momentum per unit cell width, π = ∂ℒ/∂ψ_t.
    pub pi: Vec<f64>,
}

impl NonlinearState {
    pub fn zeros(len: usize) -> Self {
        Self { time: 0.0, psi: vec![0.0; len], pi: vec![0.0; len] }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().chain(&self.pi).all(|v| v.is_finite())
    }

    /// First-order state (ψ, −π); π linearizes to w∂_tψ.
    pub fn to_first_order(&self) -> FirstOrderState {
        FirstOrderState {
            psi: self.psi.clone(),
            psi_dot: self.pi.iter().map(|p| -p).collect(),
            time: self.time,
            sector: Sector::Radial,
        }
    }
}

/// Per-node quantities of the discrete action.
#[derive(Debug, Clone, Copy)]
struct NodeTerms {
    sigma: f64,
    /// G/g − 1.
    e_g: f64,
    d2: f64,
    /// ∂D²/∂ψ at i−1, i, i+1.
    dd2: [f64; 3],
}

/// The discrete radial area functional on the even layout of a geometry.
#[derive(Debug, Clone, Serialize)]
pub struct RadialAction {
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
    /// Cell widths c_i (h, halved at the center).
    pub cell: Vec<f64>,
    pub w: Vec<f64>,
    pub g: Vec<f64>,
    pub a_node: Vec<f64>,
    /// Flux coefficient at ρ_i + h/2 (the last entry couples to the Dirichlet node).
    pub a_right: Vec<f64>,
    pub radius: Vec<f64>,
    /// Quadratic part: the even radial sector operator.
    pub op: SectorOperator,
}

impl RadialAction {
    pub fn new(geom: &CatenoidGeometry) -> Self {
        let n = geom.n;
        let op = assemble_operator(geom, 0, Parity::Even);
        let h = op.h;
        let nodes = op.nodes.clone();
        let mut cell = vec![h; nodes.len()];
        cell[0] *= 0.5;
        Self {
            n,
            h,
            cell,
            w: nodes.iter().map(|&r| geometry::volume_weight_at(n, r)).collect(),
            g: nodes.iter().map(|&r| geometry::g_rr_at(n, r)).collect(),
            a_node: nodes.iter().map(|&r| geometry::flux_coeff_at(n, r)).collect(),
            a_right: nodes.iter().map(|&r| geometry::flux_coeff_at(n, r + 0.5 * h)).collect(),
            radius: nodes.iter().map(|&r| jap(r)).collect(),
            nodes,
            op,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(CatenoidError::GridError(format!("field has {} values, grid {}", v.len(), self.len())));
        }
        Ok(())
    }

    fn terms(&self, psi: &[f64], i: usize) -> NodeTerms {
        let m = self.len();
        let h = self.h;
        let nf = self.n as f64;
        let sigma = psi[i] * self.radius[i].powi(-(self.n as i32));
        let e_g = -(nf - 1.0) * sigma * (2.0 - (nf - 1.0) * sigma);
        let right = if i + 1 < m { psi[i + 1] } else { 0.0 };
        // even reflection ψ_{−1} = ψ_1 at the center
        let left = if i == 0 { if m > 1 { psi[1] } else { 0.0 } } else { psi[i - 1] };
        let a_r = self.a_right[i];
        let a_l = if i == 0 { self.a_right[0] } else { self.a_right[i - 1] };
        let dp = (right - psi[i]) / h;
        let dm = (psi[i] - left) / h;
        let a_i = self.a_node[i];
        let d2 = (a_r * dp * dp + a_l * dm * dm) / (2.0 * a_i);
        let dd2 = [-a_l * dm / (h * a_i), (-a_r * dp + a_l * dm) / (h * a_i), a_r * dp / (h * a_i)];
        NodeTerms { sigma, e_g, d2, dd2 }
    }

    /// ∂L/∂ψ_j at (ψ, ψ_t), together with the smallest −det of the metric block.
    fn action_gradient(&self, psi: &[f64], psi_t: &[f64], time: f64) -> Result<Vec<f64>> {
        let m = self.len();
        let nf = self.n as f64;
        let mut grad = vec![0.0; m];
        for i in 0..m {
            let t = self.terms(psi, i);
            let g = self.g[i];
            let big_g = g * (1.0 + t.e_g);
            let v2 = psi_t[i] * psi_t[i];
            let y = big_g * (1.0 - v2) + t.d2;
            self.guard(i, t.sigma, y, time, "-det of the (t, rho) metric block")?;
            let sy = y.sqrt();
            let ops = 1.0 + t.sigma;
            let r = self.radius[i];
            let a_prime = (nf - 1.0) * ops.powi(self.n as i32 - 2) / r;
            let a = self.a_node[i] * g.sqrt() * ops.powi(self.n as i32 - 1);
            let local = ((1.0 - v2) * nf * (nf - 1.0) * g * ops.powi(self.n as i32 - 2) * (1.0 - (nf - 1.0) * t.sigma) * t.sigma / r
                - a_prime * t.d2)
                / sy;
            let c = self.cell[i];
            grad[i] += c * local;
            let k = -c * a / (2.0 * sy);
            grad[i] += k * t.dd2[1];
            if i + 1 < m {
                grad[i + 1] += k * t.dd2[2];
            }
            if i > 0 {
                grad[i - 1] += k * t.dd2[0];
            } else if m > 1 {
                grad[1] += k * t.dd2[0];
            }
        }
        Ok(grad)
    }

    fn guard(&self, i: usize, sigma: f64, y: f64, time: f64, what: &str) -> Result<()> {
        if !(1.0 + sigma > 0.0) {
            return Err(CatenoidError::Breakdown(BreakdownReport {
                time,
                location: self.nodes[i],
                quantity: "profile radius".into(),
            }));
        }
        if !(y > BREAKDOWN_FLOOR) {
            return Err(CatenoidError::Breakdown(BreakdownReport { time, location: self.nodes[i], quantity: what.into() }));
        }
        Ok(())
    }

    /// L − L_catenoid = −Σ c_i (A_i√Y_i − w_i), Y = X − Gψ_t².
    pub fn reduced_action(&self, psi: &[f64], psi_t: &[f64]) -> Result<f64> {
        self.check(psi)?;
        self.check(psi_t)?;
        let nf = self.n as f64;
        let mut s = 0.0;
        for (i, &v) in psi_t.iter().enumerate() {
            let t = self.terms(psi, i);
            let g = self.g[i];
            let v2 = v * v;
            let y_rel = t.e_g - v2 * (1.0 + t.e_g) + t.d2 / g;
            self.guard(i, t.sigma, g * (1.0 + y_rel), 0.0, "-det of the (t, rho) metric block")?;
            let alpha = ((nf - 1.0) * t.sigma.ln_1p()).exp_m1();
            s -= self.cell[i] * self.w[i] * product_excess(alpha, sqrt1pm1(y_rel), 0.0);
        }
        Ok(s)
    }

    /// Euler–Lagrange force (c_i w_i)^{−1} ∂L/∂ψ_i; its linearization at 0 is Hψ.
    pub fn el_force(&self, psi: &[f64], psi_t: &[f64]) -> Result<Vec<f64>> {
        self.check(psi)?;
        self.check(psi_t)?;
        let grad = self.action_gradient(psi, psi_t, 0.0)?;
        Ok(grad.iter().enumerate().map(|(i, v)| v / (self.cell[i] * self.w[i])).collect())
    }

    /// ψ_t from the canonical momentum: ψ_t = π√X/(√G√(A²G + π²)).
    pub fn velocity(&self, psi: &[f64], pi: &[f64], time: f64) -> Result<Vec<f64>> {
        self.check(psi)?;
        self.check(pi)?;
        (0..self.len())
            .map(|i| {
                let t = self.terms(psi, i);
                let g = self.g[i];
                let big_g = g * (1.0 + t.e_g);
                let x = big_g + t.d2;
                self.guard(i, t.sigma, x.min(big_g), time, "immersion (X or G)")?;
                let a = self.a_node[i] * g.sqrt() * (1.0 + t.sigma).powi(self.n as i32 - 1);
                Ok(pi[i] * (x / big_g).sqrt() / (a * a * big_g + pi[i] * pi[i]).sqrt())
            })
            .collect()
    }

    /// π = AGψ_t/√(X − Gψ_t²).
    pub fn momentum(&self, psi: &[f64], psi_t: &[f64]) -> Result<Vec<f64>> {
        self.check(psi)?;
        self.check(psi_t)?;
        (0..self.len())
            .map(|i| {
                let t = self.terms(psi, i);
                let g = self.g[i];
                let big_g = g * (1.0 + t.e_g);
                let y = big_g * (1.0 - psi_t[i] * psi_t[i]) + t.d2;
                self.guard(i, t.sigma, y, 0.0, "-det of the (t, rho) metric block")?;
                let a = self.a_node[i] * g.sqrt() * (1.0 + t.sigma).powi(self.n as i32 - 1);
                Ok(a * big_g * psi_t[i] / y.sqrt())
            })
            .collect()
    }

    /// H − H_catenoid, H = Σ c_i √X_i √(A_i² + π_i²/G_i) (the Noether energy).
    pub fn energy_excess(&self, state: &NonlinearState) -> Result<f64> {
        self.check(&state.psi)?;
        self.check(&state.pi)?;
        let nf = self.n as f64;
        let mut s = 0.0;
        for i in 0..self.len() {
            let t = self.terms(&state.psi, i);
            let g = self.g[i];
            let big_g = g * (1.0 + t.e_g);
            self.guard(i, t.sigma, big_g.min(big_g + t.d2), state.time, "immersion (X or G)")?;
            let a = self.a_node[i] * g.sqrt() * (1.0 + t.sigma).powi(self.n as i32 - 1);
            let alpha = ((nf - 1.0) * t.sigma.ln_1p()).exp_m1();
            let bx = sqrt1pm1(t.e_g + t.d2 / g);
            let sc = sqrt1pm1(state.pi[i] * state.pi[i] / (a * a * big_g));
            s += self.cell[i] * self.w[i] * product_excess(alpha, bx, sc);
        }
        Ok(s)
    }

    /// Canonical vector field (ψ_t, π_t), π_t = c^{−1}∂L/∂ψ.
    fn vector_field(&self, psi: &[f64], pi: &[f64], time: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let v = self.velocity(psi, pi, time)?;
        let grad = self.action_gradient(psi, &v, time)?;
        let pdot = grad.iter().zip(&self.cell).map(|(g, c)| g / c).collect();
        Ok((v, pdot))
    }

    /// First-order form (ψ_t − π/w, −(π_t − wHψ)) of the part of the vector
    /// field beyond the linearized flow, in the variables (ψ, ψ̇ = −π).
    pub fn nonlinear_remainder(&self, s: &NonlinearState) -> Result<FirstOrderState> {
        self.check(&s.psi)?;
        self.check(&s.pi)?;
        let (v, pdot) = self.vector_field(&s.psi, &s.pi, s.time)?;
        let hp = self.op.apply(&s.psi);
        Ok(FirstOrderState {
            psi: (0..self.len()).map(|i| v[i] - s.pi[i] / self.w[i]).collect(),
            psi_dot: (0..self.len()).map(|i| -(pdot[i] - self.w[i] * hp[i])).collect(),
            time: s.time,
            sector: Sector::Radial,
        })
    }
}

/// LU factors of the tridiagonal matrix I − κH.
#[derive(Debug, Clone)]
struct Tridiagonal {
    sub: Vec<f64>,
    sup_mod: Vec<f64>,
    denom: Vec<f64>,
}

impl Tridiagonal {
    fn new(op: &SectorOperator, kappa: f64) -> Self {
        let m = op.len();
        let sub: Vec<f64> = (0..m).map(|i| if i > 0 { -kappa * op.flux[i - 1] / op.weights[i] } else { 0.0 }).collect();
        let sup: Vec<f64> = (0..m).map(|i| if i + 1 < m { -kappa * op.flux[i] / op.weights[i] } else { 0.0 }).collect();
        let diag: Vec<f64> = op.diag.iter().map(|d| 1.0 - kappa * d).collect();
        let mut sup_mod = vec![0.0; m];
        let mut denom = vec![0.0; m];
        for i in 0..m {
            denom[i] = diag[i] - if i > 0 { sub[i] * sup_mod[i - 1] } else { 0.0 };
            sup_mod[i] = sup[i] / denom[i];
        }
        Self { sub, sup_mod, denom }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = rhs.len();
        let mut y = vec![0.0; m];
        for i in 0..m {
            y[i] = (rhs[i] - if i > 0 { self.sub[i] * y[i - 1] } else { 0.0 }) / self.denom[i];
        }
        for i in (0..m.saturating_sub(1)).rev() {
            y[i] -= self.sup_mod[i] * y[i + 1];
        }
        y
    }
}

/// Relative update size below which a stalled fixed-point iteration counts as converged.
const STALL_FLOOR: f64 = 1e-11;

/// Implicit-midpoint stepper for the radial flow.
///
/// The linear part is solved exactly each iteration (tridiagonal), and the
/// nonlinear remainder is iterated to a fixed point, so the scheme is
/// symplectic and reduces to the linearized midpoint rule at small amplitude.
#[derive(Debug, Clone)]
pub struct NonlinearEvolver {
    pub action: RadialAction,
    pub dt: f64,
    /// Fixed-point tolerance relative to the state size.
    pub tol: f64,
    pub max_iter: usize,
    lu: Tridiagonal,
    bound_states: Vec<Vec<f64>>,
}

impl NonlinearEvolver {
    pub fn new(geom: &CatenoidGeometry, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CatenoidError::InvalidParameter(format!("time step {dt}")));
        }
        let action = RadialAction::new(geom);
        let lu = Tridiagonal::new(&action.op, 0.25 * dt * dt);
        Ok(Self { action, dt, tol: 1e-14, max_iter: 60, lu, bound_states: Vec::new() })
    }

    /// Remove these w-orthonormal bound states from ψ and π/w after every step.
    pub fn with_projection(mut self, bound_states: &[Vec<f64>]) -> Self {
        self.bound_states = bound_states.to_vec();
        self
    }

    pub fn state_from_velocity(&self, psi: &[f64], psi_t: &[f64]) -> Result<NonlinearState> {
        Ok(NonlinearState { time: 0.0, psi: psi.to_vec(), pi: self.action.momentum(psi, psi_t)? })
    }

    fn project(&self, s: &mut NonlinearState) {
        let op = &self.action.op;
        let w = &self.action.w;
        for b in &self.bound_states {
            let c = op.inner(&s.psi, b);
            s.psi.iter_mut().zip(b).for_each(|(v, bi)| *v -= c * bi);
            let v: Vec<f64> = s.pi.iter().zip(w).map(|(p, w)| p / w).collect();
            let c = op.inner(&v, b);
            s.pi.iter_mut().zip(b).zip(w).for_each(|((p, bi), w)| *p -= c * w * bi);
        }
    }

    /// Linear midpoint solve with a frozen remainder (nψ, nπ).
    fn midpoint_linear(&self, s: &NonlinearState, npsi: &[f64], npi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dt = self.dt;
        let a = &self.action;
        let h0 = a.op.apply(&s.psi);
        let rhs: Vec<f64> = (0..a.len())
            .map(|i| s.psi[i] + 0.25 * dt * dt * h0[i] + dt * s.pi[i] / a.w[i] + dt * npsi[i] + 0.5 * dt * dt * npi[i] / a.w[i])
            .collect();
        let psi1 = self.lu.solve(&rhs);
        let sum: Vec<f64> = s.psi.iter().zip(&psi1).map(|(x, y)| x + y).collect();
        let hs = a.op.apply(&sum);
        let pi1 = (0..a.len()).map(|i| s.pi[i] + 0.5 * dt * a.w[i] * hs[i] + dt * npi[i]).collect();
        (psi1, pi1)
    }

    /// One implicit-midpoint step of the full flow.
    pub fn step(&self, s: &NonlinearState, step: usize) -> Result<NonlinearState> {
        let a = &self.action;
        a.check(&s.psi)?;
        a.check(&s.pi)?;
        let m = a.len();
        let mut bar = s.clone();
        let mut next = s.clone();
        let mut converged = false;
        let mut prev = f64::INFINITY;
        for _ in 0..self.max_iter {
            let (v, pdot) = a.vector_field(&bar.psi, &bar.pi, s.time)?;
            let hb = a.op.apply(&bar.psi);
            let npsi: Vec<f64> = (0..m).map(|i| v[i] - bar.pi[i] / a.w[i]).collect();
            let npi: Vec<f64> = (0..m).map(|i| pdot[i] - a.w[i] * hb[i]).collect();
            let (psi1, pi1) = self.midpoint_linear(s, &npsi, &npi);
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..m {
                let nb_psi = 0.5 * (s.psi[i] + psi1[i]);
                let nb_pi = 0.5 * (s.pi[i] + pi1[i]);
                diff = diff.max((nb_psi - bar.psi[i]).abs()).max((nb_pi - bar.pi[i]).abs() / a.w[i]);
                scale = scale.max(nb_psi.abs()).max(nb_pi.abs() / a.w[i]);
                bar.psi[i] = nb_psi;
                bar.pi[i] = nb_pi;
            }
            next.psi = psi1;
            next.pi = pi1;
            if !diff.is_finite() {
                return Err(CatenoidError::NumericalBlowup { step });
            }
            // at larger amplitudes the iteration can stall at the roundoff floor above tol
            if diff <= self.tol * scale || (diff >= prev && diff <= STALL_FLOOR * scale) {
                converged = true;
                break;
            }
            prev = diff;
        }
        if !converged {
            return Err(CatenoidError::NumericalBlowup { step });
        }
        next.time = s.time + self.dt;
        self.project(&mut next);
        if !next.is_finite() {
            return Err(CatenoidError::NumericalBlowup { step });
        }
        Ok(next)
    }

    /// The same midpoint rule applied to the linearized flow.
    pub fn step_linearized(&self, s: &NonlinearState) -> Result<NonlinearState> {
        self.action.check(&s.psi)?;
        self.action.check(&s.pi)?;
        let zero = vec![0.0; self.action.len()];
        let (psi, pi) = self.midpoint_linear(s, &zero, &zero);
        let mut next = NonlinearState { time: s.time + self.dt, psi, pi };
        self.project(&mut next);
        Ok(next)
    }

    /// Advance to `horizon` with the full (or linearized) flow, observing every state.
    pub fn run<F: FnMut(&NonlinearState)>(
        &self,
        initial: &NonlinearState,
        horizon: f64,
        linearized: bool,
        mut observe: F,
    ) -> Result<NonlinearState> {
        let steps = (horizon / self.dt - 1e-9).ceil().max(0.0) as usize;
        let mut state = initial.clone();
        self.project(&mut state);
        observe(&state);
        for k in 0..steps {
            state = if linearized { self.step_linearized(&state)? } else { self.step(&state, k + 1)? };
            observe(&state);
        }
        Ok(state)
    }

    pub fn energy(&self, s: &NonlinearState) -> Result<f64> {
        self.action.energy_excess(s)
    }
}

/// One step of the nonlinear flow (free-function form of `NonlinearEvolver::step`).
pub fn step_nonlinear(evolver: &NonlinearEvolver, state: &NonlinearState) -> Result<NonlinearState> {
    evolver.step(state, 0)
}
