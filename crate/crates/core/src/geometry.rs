//! Catenoid geometry: profile, metric weights, curvature, boosts and the
//! exterior graph profile.
//!
//! The catenoid in ℝ^{n+1} is parametrized by ρ ∈ ℝ and ω ∈ S^{n−1} as
//! F(ρ, ω) = (⟨ρ⟩Θ(ω), z(ρ)) with ⟨ρ⟩ = √(1+ρ²). Everything except the height
//! z is available in closed form; z needs one quadrature.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CatenoidError, Result};
use crate::quadrature;

/// Japanese bracket ⟨ρ⟩ = √(1+ρ²); also the profile radius.
#[inline]
pub fn jap(rho: f64) -> f64 {
    (1.0 + rho * rho).sqrt()
}

/// q(x) = ((1+x)^{n−1} − 1)/x written as a positive polynomial so that it is
/// exact at x = 0.
pub fn q_poly(n: usize, x: f64) -> f64 {
    let m = n - 1;
    let mut binom = m as f64;
    let mut acc = binom;
    let mut pow = 1.0;
    for k in 2..=m {
        binom *= (m - k + 1) as f64 / k as f64;
        pow *= x;
        acc += binom * pow;
    }
    acc
}

/// dz/dρ = 1/(⟨ρ⟩√q(ρ²)). Even and smooth through the neck.
#[inline]
pub fn height_slope(n: usize, rho: f64) -> f64 {
    1.0 / (jap(rho) * q_poly(n, rho * rho).sqrt())
}

/// Metric coefficient g_ρρ = (1+ρ²)^{n−2}/q(ρ²); limit 1/(n−1) at the neck.
#[inline]
pub fn g_rr_at(n: usize, rho: f64) -> f64 {
    let x = rho * rho;
    (1.0 + x).powi(n as i32 - 2) / q_poly(n, x)
}

/// Volume density w = √g_ρρ ⟨ρ⟩^{n−1} (per unit solid angle).
#[inline]
pub fn volume_weight_at(n: usize, rho: f64) -> f64 {
    g_rr_at(n, rho).sqrt() * jap(rho).powi(n as i32 - 1)
}

/// Flux coefficient a = ⟨ρ⟩^{n−1}/√g_ρρ, so that Δu = w^{−1}(a u')' radially.
#[inline]
pub fn flux_coeff_at(n: usize, rho: f64) -> f64 {
    jap(rho).powi(n as i32 - 1) / g_rr_at(n, rho).sqrt()
}

/// |II|² = n(n−1)⟨ρ⟩^{−2n}.
#[inline]
pub fn ii_sq_at(n: usize, rho: f64) -> f64 {
    (n * (n - 1)) as f64 * jap(rho).powi(-2 * n as i32)
}

/// Principal curvatures of the catenoid at ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Curvatures {
    /// Curvature of the profile curve.
    pub lambda1: f64,
    /// The (n−1)-fold rotational curvature.
    pub lambda_bar: f64,
    pub ii_sq: f64,
}

pub fn curvatures_at(n: usize, rho: f64) -> Curvatures {
    // λ̄ = 1/(r√(1+Z'²)) with 1+Z'² = r^{2(n−1)}
    let lambda_bar = jap(rho).powi(-(n as i32));
    let lambda1 = -((n - 1) as f64) * lambda_bar;
    Curvatures {
        lambda1,
        lambda_bar,
        ii_sq: lambda1 * lambda1 + (n - 1) as f64 * lambda_bar * lambda_bar,
    }
}

/// Endpoint S = ∫₁^∞ dr/√(r^{2(n−1)}−1) of the height range.
///
/// With r = 1/u and u = 1 − v² the integrand becomes
/// 2u^{n−3}/√(Σ_{k<2n−2} u^k), smooth on [0, 1].
pub fn endpoint_s(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(CatenoidError::InvalidDimension(n));
    }
    if n == 2 {
        return Err(CatenoidError::DivergentIntegral(n));
    }
    quadrature::integrate(|v| s_integrand(n, v), 0.0, 1.0, 1e-15, 1e-14)
}

fn s_integrand(n: usize, v: f64) -> f64 {
    let u = 1.0 - v * v;
    let mut sum = 0.0;
    let mut p = 1.0;
    for _ in 0..(2 * n - 2) {
        sum += p;
        p *= u;
    }
    2.0 * u.powi(n as i32 - 3) / sum.sqrt()
}

/// S − z(ρ): the part of the height integral beyond ⟨ρ⟩, as ∫₀^{1/⟨ρ⟩} u^{n−3}/√(1−u^{2(n−1)}) du.
pub fn height_tail(n: usize, rho: f64) -> Result<f64> {
    if n < 3 {
        return Err(CatenoidError::DivergentIntegral(n));
    }
    let u0 = 1.0 / jap(rho);
    let m = 2 * (n - 1) as i32;
    quadrature::integrate(
        |u: f64| u.powi(n as i32 - 3) / (1.0 - u.powi(m)).sqrt(),
        0.0,
        u0,
        1e-16,
        1e-13,
    )
}

/// Pointwise height z(ρ) by adaptive quadrature of the smooth slope.
pub fn height_at(n: usize, rho: f64) -> Result<f64> {
    let mag = quadrature::integrate(|s| height_slope(n, s), 0.0, rho.abs(), 1e-15, 1e-14)?;
    Ok(mag.copysign(rho))
}

/// Point Θ(ω) ∈ S^{n−1} ⊂ ℝⁿ in hyperspherical angles ω = (θ₁, …, θ_{n−1}).
pub fn sphere_point(omega: &[f64]) -> Vec<f64> {
    let dim = omega.len() + 1;
    let mut out = vec![0.0; dim];
    let mut prod = 1.0;
    for (k, th) in omega.iter().enumerate() {
        out[k] = prod * th.cos();
        prod *= th.sin();
    }
    out[dim - 1] = prod;
    out
}

/// Sampled catenoid on a uniform ρ grid.
#[derive(Debug, Clone, Serialize)]
pub struct CatenoidGeometry {
    pub n: usize,
    pub rho_max: f64,
    /// Number of grid intervals; the grid has `n_intervals + 1` nodes.
    pub n_intervals: usize,
    pub grid: Vec<f64>,
    pub height: Vec<f64>,
    /// `f64::INFINITY` when n = 2.
    pub endpoint_s: f64,
    pub g_rr: Vec<f64>,
    pub volume_weight: Vec<f64>,
    pub second_fundamental_sq: Vec<f64>,
}

impl CatenoidGeometry {
    pub fn spacing(&self) -> f64 {
        2.0 * self.rho_max / self.n_intervals as f64
    }

    /// Index of the node ρ = 0.
    pub fn center(&self) -> usize {
        self.n_intervals / 2
    }

    pub fn radius(&self, rho: f64) -> f64 {
        jap(rho)
    }

    pub fn flux_coeff(&self, rho: f64) -> f64 {
        flux_coeff_at(self.n, rho)
    }

    pub fn height_at(&self, rho: f64) -> Result<f64> {
        height_at(self.n, rho)
    }

    /// Ambient point F(ρ, ω) ∈ ℝ^{n+1}.
    pub fn embedding(&self, rho: f64, omega: &[f64]) -> Result<Vec<f64>> {
        let mut p: Vec<f64> = sphere_point(omega).into_iter().map(|c| c * jap(rho)).collect();
        p.push(self.height_at(rho)?);
        Ok(p)
    }

    /// Point of the boosted and translated catenoid Λ_{−ℓ₀}(t, F(ρ,ω)) + (0, a₀)
    /// in ℝ^{1+(n+1)}; `a0` and `ell0` have n+1 spatial components.
    pub fn boosted_point(&self, a0: &[f64], ell0: &[f64], t: f64, rho: f64, omega: &[f64]) -> Result<Vec<f64>> {
        let neg: Vec<f64> = ell0.iter().map(|v| -v).collect();
        let b = boost(&neg)?;
        let mut x = vec![t];
        x.extend(self.embedding(rho, omega)?);
        let y = &b.lambda * nalgebra::DVector::from_vec(x);
        let mut out: Vec<f64> = y.iter().copied().collect();
        for (k, a) in a0.iter().enumerate() {
            out[k + 1] += a;
        }
        Ok(out)
    }
}

/// Build the sampled catenoid on `n_intervals` uniform intervals of [−rho_max, rho_max].
pub fn solve_profile(n: usize, rho_max: f64, n_intervals: usize) -> Result<CatenoidGeometry> {
    if n < 2 {
        return Err(CatenoidError::InvalidDimension(n));
    }
    if n_intervals < 16 || !n_intervals.is_multiple_of(2) {
        return Err(CatenoidError::InvalidParameter(format!(
            "grid count {n_intervals} must be even and >= 16"
        )));
    }
    if !(rho_max > 1.0) {
        return Err(CatenoidError::InvalidParameter(format!("rho_max = {rho_max} must exceed 1")));
    }
    let half = n_intervals / 2;
    let h = rho_max / half as f64;
    let mut grid = vec![0.0; n_intervals + 1];
    let mut height = vec![0.0; n_intervals + 1];
    let mut z = 0.0;
    for k in 1..=half {
        let (r0, r1) = ((k - 1) as f64 * h, k as f64 * h);
        z += quadrature::integrate(|s| height_slope(n, s), r0, r1, 1e-17, 1e-15)?;
        if !z.is_finite() {
            return Err(CatenoidError::QuadratureFailure(format!("height at rho = {r1}")));
        }
        grid[half + k] = r1;
        grid[half - k] = -r1;
        height[half + k] = z;
        height[half - k] = -z;
    }
    let endpoint = match endpoint_s(n) {
        Ok(s) => s,
        Err(CatenoidError::DivergentIntegral(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(CatenoidGeometry {
        n,
        rho_max,
        n_intervals,
        g_rr: grid.iter().map(|&r| g_rr_at(n, r)).collect(),
        volume_weight: grid.iter().map(|&r| volume_weight_at(n, r)).collect(),
        second_fundamental_sq: grid.iter().map(|&r| ii_sq_at(n, r)).collect(),
        grid,
        height,
        endpoint_s: endpoint,
    })
}

pub fn second_fundamental(geometry: &CatenoidGeometry, rho: f64) -> Curvatures {
    curvatures_at(geometry.n, rho)
}

/// Minkowski form η = diag(−1, 1, …, 1) on ℝ^{1+d}.
pub fn minkowski(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(dim, dim);
    m[(0, 0)] = -1.0;
    m
}

/// m(X, Y) for ambient vectors with time component first.
pub fn mdot(x: &[f64], y: &[f64]) -> f64 {
    -x[0] * y[0] + x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum::<f64>()
}

/// Lorentz boost with velocity ℓ acting on ℝ^{1+d}, d = ℓ.len().
#[derive(Debug, Clone)]
pub struct BoostData {
    pub ell: Vec<f64>,
    pub gamma: f64,
    /// Λ_ℓ = [[γ, −γℓᵀ], [−γℓ, A_ℓ]].
    pub lambda: DMatrix<f64>,
    /// Spatial block A_ℓ = γP_ℓ + P_ℓ^⊥ on ℝ^d.
    pub a: DMatrix<f64>,
}

impl BoostData {
    /// A_ℓ^{−1} = γ^{−1}P_ℓ + P_ℓ^⊥.
    pub fn a_inverse(&self) -> DMatrix<f64> {
        spatial_block(&self.ell, 1.0 / self.gamma)
    }
}

fn spatial_block(ell: &[f64], along: f64) -> DMatrix<f64> {
    let d = ell.len();
    let s2: f64 = ell.iter().map(|v| v * v).sum();
    let mut a = DMatrix::identity(d, d);
    if s2 > 0.0 {
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] += (along - 1.0) * ell[i] * ell[j] / s2;
            }
        }
    }
    a
}

pub fn boost(ell: &[f64]) -> Result<BoostData> {
    let s2: f64 = ell.iter().map(|v| v * v).sum();
    if s2 >= 1.0 || !s2.is_finite() {
        return Err(CatenoidError::SuperluminalBoost(s2.sqrt()));
    }
    let gamma = 1.0 / (1.0 - s2).sqrt();
    let d = ell.len();
    let a = spatial_block(ell, gamma);
    let mut lambda = DMatrix::zeros(d + 1, d + 1);
    lambda[(0, 0)] = gamma;
    for i in 0..d {
        lambda[(0, i + 1)] = -gamma * ell[i];
        lambda[(i + 1, 0)] = -gamma * ell[i];
        for j in 0..d {
            lambda[(i + 1, j + 1)] = a[(i, j)];
        }
    }
    Ok(BoostData { ell: ell.to_vec(), gamma, lambda, a })
}

/// The catenoid end written as a graph over the plane: height Q(r̃) for r̃ ≥ 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GraphProfile {
    pub n: usize,
    pub endpoint_s: f64,
}

pub fn graph_profile(geometry: &CatenoidGeometry) -> Result<GraphProfile> {
    if geometry.n < 3 {
        return Err(CatenoidError::DivergentIntegral(geometry.n));
    }
    Ok(GraphProfile { n: geometry.n, endpoint_s: geometry.endpoint_s })
}

impl GraphProfile {
    /// Q(r̃) = z(√(r̃²−1)).
    pub fn q(&self, r: f64) -> Result<f64> {
        let rho = (r * r - 1.0).max(0.0).sqrt();
        if rho > 8.0 {
            Ok(self.endpoint_s - height_tail(self.n, rho)?)
        } else {
            height_at(self.n, rho)
        }
    }

    pub fn qp(&self, r: f64) -> f64 {
        1.0 / (r.powi(2 * (self.n as i32 - 1)) - 1.0).sqrt()
    }

    pub fn qpp(&self, r: f64) -> f64 {
        let m = self.n as i32 - 1;
        let d = r.powi(2 * m) - 1.0;
        -(m as f64) * r.powi(2 * m - 1) / d.powf(1.5)
    }

    /// Residual of the minimal-graph ODE Q'' + (n−1)Q'/r − Q'²Q''/(1+Q'²),
    /// scaled by the size of its largest term.
    pub fn ode_residual(&self, r: f64) -> f64 {
        let (d1, d2) = (self.qp(r), self.qpp(r));
        let t1 = d2;
        let t2 = (self.n - 1) as f64 * d1 / r;
        let t3 = -d1 * d1 * d2 / (1.0 + d1 * d1);
        (t1 + t2 + t3) / t1.abs().max(t2.abs()).max(t3.abs())
    }
}
