//! Reference computations that share no code path with the production solvers.
//!
//! These back the acceptance checks and the CLI cross-checks. They are slow and
//! deliberately naive: adaptive Simpson instead of Gauss–Kronrod, RK4 shooting
//! instead of a tridiagonal eigensolve.

use crate::geometry::{self, jap};
use crate::quadrature;
use crate::spectrum;
use crate::{CatenoidError, Result};

/// Adaptive Simpson with local Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Height endpoint S = lim z(ρ) from the raw slope in ρ, mapped to [0, 1] by ρ = t/(1−t).
pub fn endpoint_s(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(CatenoidError::DivergentIntegral(n));
    }
    let m = 2.0 * (n as f64 - 1.0);
    let f = |t: f64| {
        if t <= 0.0 {
            return 1.0 / ((n - 1) as f64).sqrt();
        }
        if t >= 1.0 {
            return if n == 3 { 1.0 } else { 0.0 };
        }
        let rho = t / (1.0 - t);
        // ⟨ρ⟩^m − 1 without cancellation near the neck
        let d = (0.5 * m * (rho * rho).ln_1p()).exp_m1();
        rho / (jap(rho) * d.sqrt()) / ((1.0 - t) * (1.0 - t))
    };
    Ok(simpson(&f, 0.0, 1.0, 1e-15))
}

/// Integrates (a u')' = w(λ − V)u inward from a Dirichlet wall at ρ_max with
/// RK4 and returns the sign-carrying neck log-derivative a u'/|u|.
fn neck_flux(n: usize, lambda: f64, rho_max: f64, steps: usize) -> f64 {
    let rhs = |r: f64, u: f64, p: f64| {
        let a = geometry::flux_coeff_at(n, r);
        let w = geometry::volume_weight_at(n, r);
        (p / a, w * (lambda - spectrum::effective_potential(n, 0, r)) * u)
    };
    let dr = -rho_max / steps as f64;
    let (mut r, mut u, mut p) = (rho_max, 0.0, -1e-300);
    for _ in 0..steps {
        let k1 = rhs(r, u, p);
        let k2 = rhs(r + 0.5 * dr, u + 0.5 * dr * k1.0, p + 0.5 * dr * k1.1);
        let k3 = rhs(r + 0.5 * dr, u + 0.5 * dr * k2.0, p + 0.5 * dr * k2.1);
        let k4 = rhs(r + dr, u + dr * k3.0, p + dr * k3.1);
        u += dr / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p += dr / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        r += dr;
        let s = u.abs().max(p.abs());
        if s > 1e100 {
            u /= s;
            p /= s;
        }
    }
    p / u.abs()
}

/// Even radial bound state μ² by shooting: an even eigenfunction has zero flux at the neck.
///
/// Steps are 1e−3 in ρ; the bracket [0.05, 25] covers the bound state for n ≤ 7.
pub fn bound_state(n: usize, rho_max: f64) -> Result<f64> {
    if n < 3 || !(rho_max > 0.0) {
        return Err(CatenoidError::InvalidParameter(format!("shooting oracle needs n ≥ 3 and ρ_max > 0, got n = {n}, ρ_max = {rho_max}")));
    }
    let steps = (rho_max * 1000.0).ceil() as usize;
    quadrature::bisect(|l| neck_flux(n, l, rho_max, steps), 0.05, 25.0, 1e-13)
        .ok_or_else(|| CatenoidError::NoBracket("shooting oracle: no sign change of the neck flux on [0.05, 25]".into()))
}
