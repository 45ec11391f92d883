//! Causal time-smoothing operators S and S̃ with (S − I)h = d/dt(S̃h).
//!
//! k(s) = c·exp(−1/(s(1−s))) on (0, 1) with unit mass, k̃(r) = −∫_r^∞ k for
//! r ≥ 0 and 0 otherwise. Sh(t) = ∫ h(s) k(t−s) ds only reads h on [t−1, t].

use serde::Serialize;

use crate::error::{CatenoidError, Result};
use crate::quadrature;

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

/// The kernel pair (k, k̃).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Smoother {
    /// ∫₀¹ exp(−1/(s(1−s))) ds; k is the bump divided by this.
    pub normalization: f64,
}

impl Smoother {
    pub fn new() -> Result<Self> {
        let normalization = quadrature::integrate(bump, 0.0, 1.0, 1e-18, 1e-14)?;
        Ok(Self { normalization })
    }

    pub fn k(&self, s: f64) -> f64 {
        bump(s) / self.normalization
    }

    /// k̃(r) = −∫_r^1 k; −1 at r = 0, 0 for r ≥ 1 and for r < 0.
    pub fn ktilde(&self, r: f64) -> f64 {
        if !(0.0..1.0).contains(&r) {
            return 0.0;
        }
        // integrate over the shorter side to keep the result accurate near both ends
        let tol = 1e-17;
        if r <= 0.5 {
            let head = quadrature::integrate(bump, 0.0, r, tol, 1e-14).unwrap_or(0.0);
            -1.0 + head / self.normalization
        } else {
            -quadrature::integrate(bump, r, 1.0, tol, 1e-14).unwrap_or(0.0) / self.normalization
        }
    }

    /// (Sh(t), S̃h(t)) by adaptive quadrature. `h` must be defined on
    /// [max(t−1, −1), t]; callers supply the extension to [−1, 0].
    pub fn apply_continuous<F: Fn(f64) -> f64>(&self, h: F, t: f64) -> Result<(f64, f64)> {
        if t < 0.0 || !t.is_finite() {
            return Err(CatenoidError::HistoryError(t));
        }
        let lo = (t - 1.0).max(-1.0);
        let s = quadrature::integrate(|s| h(s) * self.k(t - s), lo, t, 1e-15, 1e-13)?;
        let st = quadrature::integrate(|s| h(s) * self.ktilde(t - s), lo, t, 1e-15, 1e-13)?;
        Ok((s, st))
    }

    /// Discrete version for series sampled at spacing 1/`steps_per_unit`.
    pub fn sampled(&self, steps_per_unit: usize) -> Result<SampledSmoother> {
        if steps_per_unit < 8 {
            return Err(CatenoidError::InvalidParameter(format!(
                "smoother needs at least 8 samples per unit time, got {steps_per_unit}"
            )));
        }
        let m = steps_per_unit;
        let dt = 1.0 / m as f64;
        // k vanishes to all orders at both ends: the trapezoid rule is spectral
        let s_weights: Vec<f64> = (0..=m).map(|j| dt * self.k(j as f64 * dt)).collect();
        // k̃ jumps at r = 0: fourth-order Gregory correction at that end only
        let gregory = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
        let st_weights: Vec<f64> = (0..=m)
            .map(|j| {
                let g = if j < 3 { gregory[j] } else { 1.0 };
                dt * g * self.ktilde(j as f64 * dt)
            })
            .collect();
        Ok(SampledSmoother { steps_per_unit: m, dt, s_weights, st_weights })
    }
}

/// S and S̃ on a uniformly sampled series with samples at t_j = j·dt, j ≥ 0;
/// values at negative times are held at the first sample.
#[derive(Debug, Clone, Serialize)]
pub struct SampledSmoother {
    pub steps_per_unit: usize,
    pub dt: f64,
    /// Quadrature weights of k at lags 0, dt, …, 1.
    pub s_weights: Vec<f64>,
    /// Quadrature weights of k̃ at the same lags.
    pub st_weights: Vec<f64>,
}

impl SampledSmoother {
    fn convolve<F: Fn(i64) -> f64>(&self, weights: &[f64], value: F, k: usize) -> f64 {
        weights.iter().enumerate().map(|(j, w)| w * value(k as i64 - j as i64)).sum()
    }

    fn check(&self, len: usize, k: usize) -> Result<()> {
        if k >= len {
            return Err(CatenoidError::HistoryError(k as f64 * self.dt));
        }
        Ok(())
    }

    /// (Sh, S̃h) at sample k; only reads samples 0..=k.
    pub fn apply(&self, series: &[f64], k: usize) -> Result<(f64, f64)> {
        self.check(series.len(), k)?;
        let value = |i: i64| series[i.max(0) as usize];
        Ok((self.convolve(&self.s_weights, value, k), self.convolve(&self.st_weights, value, k)))
    }

    /// Same for a series whose values before t = 0 follow a given rule (used
    /// for exponentially weighted series e^{∓μt}F(t) with F held constant).
    pub fn apply_with<F: Fn(i64) -> f64>(&self, value: F, k: usize) -> (f64, f64) {
        (self.convolve(&self.s_weights, &value, k), self.convolve(&self.st_weights, &value, k))
    }

    /// Weight of the current sample in S̃ (k̃(0)·Gregory·dt).
    pub fn current_weight(&self) -> f64 {
        self.st_weights[0]
    }

    /// S̃ applied at t = 0 to a held-constant series of unit value.
    pub fn constant_history_factor(&self) -> f64 {
        self.st_weights.iter().sum()
    }
}
