//! Linear wave ∂_t²ψ = Hψ on one harmonic sector, H the flux-form sector operator.

use serde::Serialize;

use super::{BoundaryCondition, Integrator};
use crate::error::{CatenoidError, Result};
use crate::geometry;
use crate::modulation::{FirstOrderState, Sector};
use crate::spectrum::{project_continuous, Parity, SectorOperator};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearState {
    pub time: f64,
    pub psi: Vec<f64>,
    pub dt_psi: Vec<f64>,
    /// Values at the two outer boundary nodes (left, right); zero under Dirichlet.
    pub edges: [f64; 2],
}

impl LinearState {
    pub fn new(psi: Vec<f64>, dt_psi: Vec<f64>) -> Self {
        Self { time: 0.0, psi, dt_psi, edges: [0.0; 2] }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![0.0; len], vec![0.0; len])
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().chain(&self.dt_psi).chain(&self.edges).all(|v| v.is_finite())
    }

    /// (ψ, ψ̇) with ψ̇ = −w∂_tψ.
    pub fn to_first_order(&self, w: &[f64], sector: Sector) -> FirstOrderState {
        FirstOrderState {
            psi: self.psi.clone(),
            psi_dot: self.dt_psi.iter().zip(w).map(|(v, w)| -w * v).collect(),
            time: self.time,
            sector,
        }
    }

    pub fn from_first_order(state: &FirstOrderState, w: &[f64]) -> Self {
        Self {
            time: state.time,
            psi: state.psi.clone(),
            dt_psi: state.psi_dot.iter().zip(w).map(|(p, w)| -p / w).collect(),
            edges: [0.0; 2],
        }
    }
}

/// Boundary coupling of one outer edge.
#[derive(Debug, Clone, Copy)]
struct Edge {
    /// Unknown adjacent to the boundary node.
    node: usize,
    /// a_{edge}/h² times h, divided later by the node weight.
    flux: f64,
    /// Radial characteristic speed 1/√g_ρρ at the boundary.
    speed: f64,
    /// |ρ| of the boundary node.
    radius: f64,
}

/// Time stepper for one sector.
#[derive(Debug, Clone)]
pub struct LinearEvolver {
    pub op: SectorOperator,
    pub dt: f64,
    pub integrator: Integrator,
    pub boundary: BoundaryCondition,
    bound_states: Vec<Vec<f64>>,
    edges: [Option<Edge>; 2],
}

impl LinearEvolver {
    pub fn new(op: &SectorOperator, dt: f64, integrator: Integrator, boundary: BoundaryCondition) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CatenoidError::InvalidParameter(format!("time step {dt}")));
        }
        if op.is_empty() {
            return Err(CatenoidError::GridError("empty sector operator".into()));
        }
        let n = op.n;
        let h = op.h;
        let m = op.len();
        let make = |node: usize, rb: f64| Edge {
            node,
            flux: geometry::flux_coeff_at(n, 0.5 * (op.nodes[node] + rb)) / h,
            speed: 1.0 / geometry::g_rr_at(n, rb).sqrt(),
            radius: rb.abs(),
        };
        let right = Some(make(m - 1, op.nodes[m - 1] + h));
        let left = if op.parity == Parity::Full { Some(make(0, op.nodes[0] - h)) } else { None };
        Ok(Self { op: op.clone(), dt, integrator, boundary, bound_states: Vec::new(), edges: [left, right] })
    }

    /// Remove these w-orthonormal bound states from ψ and ∂_tψ after every step.
    pub fn with_projection(mut self, bound_states: &[Vec<f64>]) -> Self {
        self.bound_states = bound_states.to_vec();
        self
    }

    /// Hψ including the boundary-node values.
    pub fn apply(&self, psi: &[f64], edges: &[f64; 2]) -> Vec<f64> {
        let mut out = self.op.apply(psi);
        if self.boundary == BoundaryCondition::Sommerfeld {
            for (k, e) in self.edges.iter().enumerate() {
                if let Some(e) = e {
                    out[e.node] += e.flux * edges[k] / self.op.weights[e.node];
                }
            }
        }
        out
    }

    /// Outflow update ∂_tb = −c(b − u_adj)/h − (n−1)b/(2|ρ|) of the boundary values.
    fn edge_rate(&self, psi: &[f64], edges: &[f64; 2]) -> [f64; 2] {
        let mut rate = [0.0; 2];
        if self.boundary == BoundaryCondition::Sommerfeld {
            let decay = (self.op.n - 1) as f64 / 2.0;
            for (k, e) in self.edges.iter().enumerate() {
                if let Some(e) = e {
                    rate[k] = -e.speed * (edges[k] - psi[e.node]) / self.op.h - decay * edges[k] / e.radius;
                }
            }
        }
        rate
    }

    fn project(&self, state: &mut LinearState) -> Result<()> {
        if !self.bound_states.is_empty() {
            state.psi = project_continuous(&state.psi, &self.op, &self.bound_states)?;
            state.dt_psi = project_continuous(&state.dt_psi, &self.op, &self.bound_states)?;
        }
        Ok(())
    }

    /// One step; `step` is the index reported on blow-up.
    pub fn step(&self, state: &LinearState, step: usize) -> Result<LinearState> {
        if state.psi.len() != self.op.len() || state.dt_psi.len() != self.op.len() {
            return Err(CatenoidError::GridError(format!("state has {} values, grid {}", state.psi.len(), self.op.len())));
        }
        let dt = self.dt;
        let mut next = match self.integrator {
            Integrator::Leapfrog => {
                let acc = self.apply(&state.psi, &state.edges);
                let half: Vec<f64> = state.dt_psi.iter().zip(&acc).map(|(v, a)| v + 0.5 * dt * a).collect();
                let psi: Vec<f64> = state.psi.iter().zip(&half).map(|(u, v)| u + dt * v).collect();
                let rate = self.edge_rate(&state.psi, &state.edges);
                let edges = [state.edges[0] + dt * rate[0], state.edges[1] + dt * rate[1]];
                let acc = self.apply(&psi, &edges);
                let dt_psi = half.iter().zip(&acc).map(|(v, a)| v + 0.5 * dt * a).collect();
                LinearState { time: state.time + dt, psi, dt_psi, edges }
            }
            Integrator::Rk4 => self.rk4(state),
        };
        self.project(&mut next)?;
        if !next.is_finite() {
            return Err(CatenoidError::NumericalBlowup { step });
        }
        Ok(next)
    }

    fn rk4(&self, s: &LinearState) -> LinearState {
        let dt = self.dt;
        let f = |u: &[f64], v: &[f64], e: &[f64; 2]| (v.to_vec(), self.apply(u, e), self.edge_rate(u, e));
        let add = |x: &[f64], c: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + c * b).collect() };
        let adde = |x: &[f64; 2], c: f64, y: &[f64; 2]| [x[0] + c * y[0], x[1] + c * y[1]];
        let (k1u, k1v, k1e) = f(&s.psi, &s.dt_psi, &s.edges);
        let (k2u, k2v, k2e) = f(&add(&s.psi, 0.5 * dt, &k1u), &add(&s.dt_psi, 0.5 * dt, &k1v), &adde(&s.edges, 0.5 * dt, &k1e));
        let (k3u, k3v, k3e) = f(&add(&s.psi, 0.5 * dt, &k2u), &add(&s.dt_psi, 0.5 * dt, &k2v), &adde(&s.edges, 0.5 * dt, &k2e));
        let (k4u, k4v, k4e) = f(&add(&s.psi, dt, &k3u), &add(&s.dt_psi, dt, &k3v), &adde(&s.edges, dt, &k3e));
        let comb = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..x.len()).map(|i| x[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
        };
        let edges = [
            s.edges[0] + dt / 6.0 * (k1e[0] + 2.0 * k2e[0] + 2.0 * k3e[0] + k4e[0]),
            s.edges[1] + dt / 6.0 * (k1e[1] + 2.0 * k2e[1] + 2.0 * k3e[1] + k4e[1]),
        ];
        LinearState {
            time: s.time + dt,
            psi: comb(&s.psi, &k1u, &k2u, &k3u, &k4u),
            dt_psi: comb(&s.dt_psi, &k1v, &k2v, &k3v, &k4v),
            edges,
        }
    }

    /// Advance to `horizon`, calling `observe` on the initial state and after every step.
    pub fn run<F: FnMut(&LinearState)>(&self, initial: &LinearState, horizon: f64, mut observe: F) -> Result<LinearState> {
        let steps = (horizon / self.dt - 1e-9).ceil().max(0.0) as usize;
        let mut state = initial.clone();
        self.project(&mut state)?;
        observe(&state);
        for k in 0..steps {
            state = self.step(&state, k + 1)?;
            observe(&state);
        }
        Ok(state)
    }

    /// ½‖∂_tψ‖² − ½⟨ψ, Hψ⟩ in the w-inner product.
    pub fn energy(&self, state: &LinearState) -> f64 {
        linear_energy(&self.op, &state.psi, &state.dt_psi)
    }
}

/// ½‖v‖²_w − ½⟨u, Hu⟩_w.
pub fn linear_energy(op: &SectorOperator, u: &[f64], v: &[f64]) -> f64 {
    0.5 * op.inner(v, v) - 0.5 * op.inner(u, &op.apply(u))
}

/// The quantity conserved exactly by leapfrog between consecutive positions:
/// ½‖(u₁ − u₀)/dt‖²_w − ½⟨u₁, Hu₀⟩_w.
pub fn staggered_energy(op: &SectorOperator, u0: &[f64], u1: &[f64], dt: f64) -> f64 {
    let d: Vec<f64> = u1.iter().zip(u0).map(|(a, b)| (a - b) / dt).collect();
    0.5 * op.inner(&d, &d) - 0.5 * op.inner(u1, &op.apply(u0))
}

/// One step of the configured linear scheme (free-function form of `LinearEvolver::step`).
pub fn step_linear(evolver: &LinearEvolver, state: &LinearState) -> Result<LinearState> {
    evolver.step(state, 0)
}
