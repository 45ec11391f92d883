//! Shooting in the unstable direction: trap monitor, exit times and
//! bisection on the data parameter b.

use serde::{Deserialize, Serialize};

use crate::error::{CatenoidError, Result};
use crate::evolution::{
    Backend, BoundaryCondition, BumpSpec, DataFamily, EvolutionConfig, Integrator, LinearEvolver, LinearState,
    NonlinearEvolver,
};
use crate::geometry::{jap, solve_profile, CatenoidGeometry};
use crate::modulation::{
    symplectic_form, truncate_test_functions, FirstOrderState, Sector, Smoother, SymplecticGrid, TestFunctionSet,
    UnstableTracker,
};
use crate::quadrature::linear_fit;
use crate::spectrum::{radial_spectrum, Parity, SpectralData};

/// Trapping region |q(t)| < amplitude·⟨t⟩^{−decay_exponent}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Product of the trapping constant, the foliation scale and ε.
    pub amplitude: f64,
    pub decay_exponent: f64,
}

impl TrapConfig {
    pub fn new(amplitude: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(CatenoidError::InvalidParameter(format!("trap amplitude {amplitude}")));
        }
        Ok(Self { amplitude, decay_exponent: 3.0 })
    }

    pub fn threshold(&self, t: f64) -> f64 {
        self.amplitude * jap(t).powf(-self.decay_exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ExitHigh,
    ExitLow,
    TrappedToHorizon,
}

impl Verdict {
    pub fn sign(self) -> i8 {
        match self {
            Verdict::ExitHigh => 1,
            Verdict::ExitLow => -1,
            Verdict::TrappedToHorizon => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapStatus {
    /// |q| < threshold at each sample.
    pub inside: Vec<bool>,
    /// First sample index and time with |q| ≥ threshold.
    pub exit: Option<(usize, f64)>,
    pub verdict: Verdict,
}

/// q = μa₊ − e^{μt}S(e^{−μt}F₊) from the sampled a₊ and S(e^{−μt}F₊).
pub fn trap_quantity(mu: f64, times: &[f64], a_plus: &[f64], s_plus: &[f64]) -> Result<Vec<f64>> {
    if times.len() != a_plus.len() || times.len() != s_plus.len() {
        return Err(CatenoidError::InvalidParameter("series lengths differ".into()));
    }
    Ok(times.iter().zip(a_plus).zip(s_plus).map(|((t, a), s)| mu * a - (mu * t).exp() * s).collect())
}

/// Classify a sampled trap quantity against the shrinking threshold.
pub fn trap_monitor(times: &[f64], q: &[f64], config: &TrapConfig) -> Result<TrapStatus> {
    if times.len() != q.len() {
        return Err(CatenoidError::InvalidParameter("series lengths differ".into()));
    }
    let inside: Vec<bool> = times.iter().zip(q).map(|(&t, v)| v.abs() < config.threshold(t)).collect();
    let exit = inside.iter().position(|v| !v).map(|k| (k, times[k]));
    let verdict = match exit {
        None => Verdict::TrappedToHorizon,
        Some((k, _)) if q[k] > 0.0 => Verdict::ExitHigh,
        Some(_) => Verdict::ExitLow,
    };
    Ok(TrapStatus { inside, exit, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootConfig {
    pub n: usize,
    pub rho_max: f64,
    pub intervals: usize,
    pub cfl: f64,
    pub horizon: f64,
    pub epsilon: f64,
    /// Foliation radius R: data live in |ρ| < R/2.
    pub radius: f64,
    /// Inner radius of the test-function cutoff.
    pub cutoff_radius: f64,
    pub bump: BumpSpec,
    /// Trap amplitude in units of ε.
    pub trap_factor: f64,
    pub backend: Backend,
    /// Radius of the interior region used for sup-norms.
    pub interior_radius: f64,
    /// Full runs stop once |a₊| exceeds this multiple of ε.
    pub growth_cap: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            n: 5,
            rho_max: 40.0,
            intervals: 2048,
            cfl: 0.5,
            horizon: 30.0,
            epsilon: 1e-3,
            radius: 20.0,
            cutoff_radius: 5.0,
            bump: BumpSpec::default(),
            trap_factor: 1.0,
            backend: Backend::NonlinearRadial,
            interior_radius: 5.0,
            growth_cap: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Exit,
    Horizon,
    Saturated,
    Breakdown,
}

/// One evolution of the family member with parameter b.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateRun {
    pub b: f64,
    pub verdict: Verdict,
    pub exit_time: Option<f64>,
    pub stop: StopReason,
    pub times: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub q: Vec<f64>,
    pub threshold: Vec<f64>,
    pub interior_sup: Vec<f64>,
}

impl CandidateRun {
    /// Largest drop max_{s≤t}‖ψ(s)‖/‖ψ(t)‖ of the interior sup-norm.
    pub fn interior_decay_ratio(&self) -> f64 {
        let mut peak = 0.0f64;
        let mut best = 1.0f64;
        for &v in &self.interior_sup {
            peak = peak.max(v);
            if v > 0.0 {
                best = best.max(peak / v);
            }
        }
        best
    }

    /// Least-squares rate of log|a₊| after the exit time.
    pub fn growth_rate(&self) -> Result<f64> {
        let t0 = self.exit_time.ok_or(CatenoidError::FitError("run never left the trap".into()))?;
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.a_plus)
            .filter(|(t, a)| **t >= t0 && a.abs() > 0.0)
            .map(|(t, a)| (*t, a.abs().ln()))
            .unzip();
        if x.len() < 8 || x[x.len() - 1] - x[0] < 1.0 {
            return Err(CatenoidError::FitError(format!("{} samples after exit", x.len())));
        }
        Ok(linear_fit(&x, &y).0)
    }
}

/// Everything needed to evolve members of the data family.
#[derive(Debug, Clone)]
pub struct ShootingProblem {
    pub config: ShootConfig,
    pub geom: CatenoidGeometry,
    pub grid: SymplecticGrid,
    pub spectral: SpectralData,
    pub tf: TestFunctionSet,
    pub family: DataFamily,
    pub trap: TrapConfig,
    pub dt: f64,
    steps_per_unit: usize,
    smoother: Smoother,
}

impl ShootingProblem {
    pub fn new(config: ShootConfig) -> Result<Self> {
        if !(config.epsilon > 0.0) {
            return Err(CatenoidError::InvalidParameter(format!("epsilon {}", config.epsilon)));
        }
        let geom = solve_profile(config.n, config.rho_max, config.intervals)?;
        let evo = EvolutionConfig {
            n: config.n,
            rho_max: config.rho_max,
            intervals: config.intervals,
            parity: Parity::Even,
            sectors: vec![0],
            cfl: config.cfl,
            horizon: config.horizon,
            bc: BoundaryCondition::Dirichlet,
            integrator: Integrator::Rk4,
            epsilon: config.epsilon,
            backend: config.backend,
            data_support: 0.5 * config.radius,
        };
        evo.validate(&geom)?;
        let steps_per_unit = evo.steps_per_unit(&geom);
        let grid = SymplecticGrid::new(&geom);
        let spectral = radial_spectrum(&geom, Parity::Even)?;
        let family = DataFamily::new(&grid, &spectral, config.bump, config.epsilon, config.radius)?;
        let tf = truncate_test_functions(&grid, &spectral, config.cutoff_radius)?;
        let trap = TrapConfig::new(config.trap_factor * config.epsilon)?;
        Ok(Self {
            dt: 1.0 / steps_per_unit as f64,
            steps_per_unit,
            smoother: Smoother::new()?,
            config,
            geom,
            grid,
            spectral,
            tf,
            family,
            trap,
        })
    }

    pub fn mu(&self) -> f64 {
        self.spectral.mu()
    }

    fn interior_sup(&self, psi: &[f64]) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(psi)
            .filter(|(r, _)| r.abs() <= self.config.interior_radius)
            .fold(0.0f64, |a, (_, v)| a.max(v.abs()))
    }

    /// Evolve parameter b; stop at the trap exit unless `full`, in which case run
    /// to the horizon, the growth cap, or a geometric breakdown.
    pub fn run(&self, b: f64, full: bool) -> Result<CandidateRun> {
        let mut tracker = UnstableTracker::new(&self.grid, &self.tf, self.smoother.sampled(self.steps_per_unit)?)?;
        let steps = (self.config.horizon / self.dt - 1e-9).ceil().max(0.0) as usize;
        let cap = self.config.growth_cap * self.config.epsilon;
        let mut out = CandidateRun {
            b,
            verdict: Verdict::TrappedToHorizon,
            exit_time: None,
            stop: StopReason::Horizon,
            times: Vec::new(),
            a_plus: Vec::new(),
            q: Vec::new(),
            threshold: Vec::new(),
            interior_sup: Vec::new(),
        };
        // returns true when the run should stop
        let mut record = |k: usize, state: FirstOrderState, source: Option<FirstOrderState>, out: &mut CandidateRun| -> Result<bool> {
            let t = k as f64 * self.dt;
            let sup = self.interior_sup(&state.psi);
            tracker.push_forced(&self.grid, &self.tf, &FirstOrderState { time: t, ..state }, source.as_ref())?;
            let q = tracker.q[k];
            let a = tracker.a_plus[k];
            let lam = self.trap.threshold(t);
            out.times.push(t);
            out.a_plus.push(a);
            out.q.push(q);
            out.threshold.push(lam);
            out.interior_sup.push(sup);
            if out.exit_time.is_none() && q.abs() >= lam {
                out.exit_time = Some(t);
                out.verdict = if q > 0.0 { Verdict::ExitHigh } else { Verdict::ExitLow };
                if !full {
                    out.stop = StopReason::Exit;
                    return Ok(true);
                }
            }
            if full && a.abs() >= cap {
                out.stop = StopReason::Saturated;
                return Ok(true);
            }
            Ok(false)
        };
        let (psi, dt_psi) = self.family.velocity_form(b);
        match self.config.backend {
            Backend::Linear => {
                let ev = LinearEvolver::new(&self.spectral.op, self.dt, Integrator::Rk4, BoundaryCondition::Dirichlet)?;
                let mut s = LinearState::new(psi, dt_psi);
                if record(0, s.to_first_order(&self.grid.w, Sector::Radial), None, &mut out)? {
                    return Ok(out);
                }
                for k in 1..=steps {
                    s = ev.step(&s, k)?;
                    if record(k, s.to_first_order(&self.grid.w, Sector::Radial), None, &mut out)? {
                        break;
                    }
                }
            }
            Backend::NonlinearRadial => {
                let ev = NonlinearEvolver::new(&self.geom, self.dt)?;
                let mut s = ev.state_from_velocity(&psi, &dt_psi)?;
                if record(0, s.to_first_order(), Some(ev.action.nonlinear_remainder(&s)?), &mut out)? {
                    return Ok(out);
                }
                for k in 1..=steps {
                    s = match ev.step(&s, k) {
                        Ok(next) => next,
                        Err(CatenoidError::Breakdown(_)) if full => {
                            out.stop = StopReason::Breakdown;
                            break;
                        }
                        Err(e) => return Err(e),
                    };
                    if record(k, s.to_first_order(), Some(ev.action.nonlinear_remainder(&s)?), &mut out)? {
                        break;
                    }
                }
            }
        }
        Ok(out)
    }

    /// b at which the initial data have no component along the exact discrete
    /// unstable direction: Ω(data(b), (φ_μ, μwφ_μ)) = 0. The linear backend's
    /// bisection converges here.
    pub fn projection_root(&self) -> Result<f64> {
        let mu = self.mu();
        let phi = &self.spectral.phi_mu;
        let e = FirstOrderState {
            psi: phi.clone(),
            psi_dot: phi.iter().zip(&self.grid.w).map(|(p, w)| mu * w * p).collect(),
            time: 0.0,
            sector: Sector::Radial,
        };
        let f0 = symplectic_form(&self.grid, &self.family.state(0.0), &e)?;
        let f1 = symplectic_form(&self.grid, &self.family.state(1.0), &e)?;
        if f1 == f0 {
            return Err(CatenoidError::ModulationSingular);
        }
        Ok(-f0 / (f1 - f0))
    }

    /// Coefficient α of the exact growing direction (φ_μ, −μwφ_μ) in data(b).
    pub fn unstable_amplitude(&self, b: f64) -> Result<f64> {
        let mu = self.mu();
        let phi = &self.spectral.phi_mu;
        let e = FirstOrderState {
            psi: phi.clone(),
            psi_dot: phi.iter().zip(&self.grid.w).map(|(p, w)| mu * w * p).collect(),
            time: 0.0,
            sector: Sector::Radial,
        };
        let norm: f64 = 2.0 * mu * Sector::Radial.angular_overlap(self.config.n) * (0..phi.len()).map(|i| self.grid.measure[i] * self.grid.w[i] * phi[i] * phi[i]).sum::<f64>();
        Ok(symplectic_form(&self.grid, &self.family.state(b), &e)? / norm)
    }

    /// Same root with the truncated test function Z₋ in place of the exact direction.
    pub fn truncated_projection_root(&self) -> Result<f64> {
        let f0 = symplectic_form(&self.grid, &self.family.state(0.0), &self.tf.z_minus)?;
        let f1 = symplectic_form(&self.grid, &self.family.state(1.0), &self.tf.z_minus)?;
        if f1 == f0 {
            return Err(CatenoidError::ModulationSingular);
        }
        Ok(-f0 / (f1 - f0))
    }
}

/// Run b until it leaves the trap (or reaches the horizon).
pub fn exit_time(b: f64, problem: &ShootingProblem) -> Result<CandidateRun> {
    problem.run(b, false)
}

/// Exit times at b and b(1 + 1e−6), for spotting discontinuities of the exit map.
pub fn exit_time_continuity(b: f64, problem: &ShootingProblem) -> Result<(Option<f64>, Option<f64>)> {
    Ok((exit_time(b, problem)?.exit_time, exit_time(b * (1.0 + 1e-6), problem)?.exit_time))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub b: f64,
    pub exit_time: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub b_star: f64,
    /// Number of halvings performed.
    pub iterations: usize,
    /// Bracket after each halving, starting with the initial one.
    pub brackets: Vec<[f64; 2]>,
    /// Every evaluated candidate in evaluation order.
    pub exit_table: Vec<ExitRecord>,
}

/// Bisect on the exit sign until the bracket is narrower than `tol`.
/// `budget` bounds the number of evolutions, including the two endpoints.
pub fn bisect_b(problem: &ShootingProblem, bracket: (f64, f64), tol: f64, budget: usize) -> Result<ShootResult> {
    bisect_with(|b| exit_time(b, problem), bracket, tol, budget)
}

/// Bisection driver over any exit-time oracle.
pub fn bisect_with<F: FnMut(f64) -> Result<CandidateRun>>(
    mut run: F,
    bracket: (f64, f64),
    tol: f64,
    budget: usize,
) -> Result<ShootResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || !(tol > 0.0) {
        return Err(CatenoidError::InvalidParameter(format!("bracket [{lo}, {hi}] with tol {tol}")));
    }
    let mut table = Vec::new();
    let mut eval = |b: f64, table: &mut Vec<ExitRecord>| -> Result<Verdict> {
        if table.len() >= budget {
            return Err(CatenoidError::BudgetExhausted(table.len()));
        }
        let r = run(b)?;
        table.push(ExitRecord { b, exit_time: r.exit_time, verdict: r.verdict });
        Ok(r.verdict)
    };
    let mut brackets = vec![[lo, hi]];
    let v_lo = eval(lo, &mut table)?;
    if v_lo == Verdict::TrappedToHorizon {
        return Ok(ShootResult { b_star: lo, iterations: 0, brackets, exit_table: table });
    }
    let v_hi = eval(hi, &mut table)?;
    if v_hi == Verdict::TrappedToHorizon {
        return Ok(ShootResult { b_star: hi, iterations: 0, brackets, exit_table: table });
    }
    if v_lo == v_hi {
        return Err(CatenoidError::BadBracket(v_lo.sign()));
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = eval(mid, &mut table)?;
        iterations += 1;
        match v {
            Verdict::TrappedToHorizon => {
                brackets.push([mid, mid]);
                return Ok(ShootResult { b_star: mid, iterations, brackets, exit_table: table });
            }
            v if v == v_lo => lo = mid,
            _ => hi = mid,
        }
        brackets.push([lo, hi]);
    }
    Ok(ShootResult { b_star: 0.5 * (lo + hi), iterations, brackets, exit_table: table })
}
