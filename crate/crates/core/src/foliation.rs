//! Moving foliation by boosted, translated hyperboloids glued to flat slices,
//! exterior polar coordinates (τ, r, θ), the null frame {L, L̄, Ω, T}, and the
//! Minkowski metric in those coordinates.
//!
//! All points live in the slice {X^{n+1} = S}, i.e. in ℝ^{1+n} with the time
//! component first.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CatenoidError, Result};
use crate::geometry::{boost, jap, mdot, sphere_point};

/// 𝔪(x, y) = ½(x + y − δ₁ϱ̂((x−y)/δ₁)) with ϱ̂(s) = |s| for |s| ≥ 1 and
/// ϱ̂(s) = 3/8 + 3s²/4 − s⁴/8 inside, which matches |s| to second order at ±1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedMin {
    pub delta1: f64,
}

impl SmoothedMin {
    pub fn new(delta1: f64) -> Result<Self> {
        if !(delta1 > 0.0) || !delta1.is_finite() {
            return Err(CatenoidError::InvalidParameter(format!("gluing width {delta1}")));
        }
        Ok(Self { delta1 })
    }

    /// The even convex blend ϱ̂ and its derivative.
    pub fn blend(s: f64) -> (f64, f64) {
        if s.abs() >= 1.0 {
            (s.abs(), s.signum())
        } else {
            let s2 = s * s;
            (0.375 + 0.75 * s2 - 0.125 * s2 * s2, 1.5 * s - 0.5 * s2 * s)
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let d = self.delta1;
        0.5 * (x + y - d * Self::blend((x - y) / d).0)
    }

    /// (∂_x𝔪, ∂_y𝔪); both lie in [0, 1] and sum to 1.
    pub fn partials(&self, x: f64, y: f64) -> (f64, f64) {
        let g = Self::blend((x - y) / self.delta1).1;
        (0.5 * (1.0 - g), 0.5 * (1.0 + g))
    }
}

pub fn smoothed_min(x: f64, y: f64, delta1: f64) -> Result<f64> {
    Ok(SmoothedMin::new(delta1)?.value(x, y))
}

/// Monotone (Fritsch–Carlson) cubic Hermite interpolant of one component,
/// extended linearly beyond the samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Monotone {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl Monotone {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let m = x.len();
        let secant: Vec<f64> = (0..m - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut slope = vec![0.0; m];
        slope[0] = secant[0];
        slope[m - 1] = secant[m - 2];
        for i in 1..m - 1 {
            let (a, b) = (secant[i - 1], secant[i]);
            slope[i] = if a * b <= 0.0 {
                0.0
            } else if a == b {
                a
            } else {
                // weighted harmonic mean keeps the interpolant monotone
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
                (w1 + w2) / (w1 / a + w2 / b)
            };
        }
        Self { x: x.to_vec(), y: y.to_vec(), slope }
    }

    /// Value and first derivative.
    fn eval(&self, t: f64) -> (f64, f64) {
        let m = self.x.len();
        if t <= self.x[0] {
            return (self.y[0] + self.slope[0] * (t - self.x[0]), self.slope[0]);
        }
        if t >= self.x[m - 1] {
            return (self.y[m - 1] + self.slope[m - 1] * (t - self.x[m - 1]), self.slope[m - 1]);
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(m - 2),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1;
        let dv = (6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * d1;
        (v, dv / h)
    }
}

/// Sampled modulation curves σ ↦ ξ(σ), ℓ(σ) with the foliation scales R and δ₁.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterCurves {
    pub n: usize,
    pub sigma: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub ell: Vec<Vec<f64>>,
    pub radius: f64,
    pub delta1: f64,
    xi_interp: Vec<Monotone>,
    ell_interp: Vec<Monotone>,
}

impl ParameterCurves {
    pub fn new(sigma: Vec<f64>, xi: Vec<Vec<f64>>, ell: Vec<Vec<f64>>, radius: f64, delta1: f64) -> Result<Self> {
        if sigma.len() < 2 || xi.len() != sigma.len() || ell.len() != sigma.len() {
            return Err(CatenoidError::InvalidParameter("need at least two matching curve samples".into()));
        }
        if sigma.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CatenoidError::InvalidParameter("curve samples must be strictly increasing in σ".into()));
        }
        let n = xi[0].len();
        if n < 2 || xi.iter().chain(&ell).any(|v| v.len() != n) {
            return Err(CatenoidError::InvalidDimension(n));
        }
        if !(radius > 0.0) {
            return Err(CatenoidError::InvalidParameter(format!("foliation radius {radius}")));
        }
        SmoothedMin::new(delta1)?;
        let comp = |c: &[Vec<f64>], k: usize| Monotone::new(&sigma, &c.iter().map(|v| v[k]).collect::<Vec<_>>());
        let xi_interp = (0..n).map(|k| comp(&xi, k)).collect();
        let ell_interp = (0..n).map(|k| comp(&ell, k)).collect();
        let curves = Self { n, sigma, xi, ell, radius, delta1, xi_interp, ell_interp };
        for &s in &curves.sigma {
            let l = curves.ell(s);
            let speed = norm(&l);
            if speed >= 1.0 {
                return Err(CatenoidError::SuperluminalBoost(speed));
            }
            if norm(&curves.xi_dot(s)) >= 1.0 {
                return Err(CatenoidError::InvalidParameter(format!("|dξ/dσ| ≥ 1 at σ = {s}")));
            }
            if curves.tau_dot(s) <= 0.0 || norm(&curves.eta_prime(s)) >= 1.0 {
                return Err(CatenoidError::InvalidParameter(format!("center curve η is not timelike at σ = {s}")));
            }
        }
        Ok(curves)
    }

    /// Sample closures on `samples` uniform points of [lo, hi].
    pub fn from_fn<F: Fn(f64) -> Vec<f64>, G: Fn(f64) -> Vec<f64>>(
        range: (f64, f64),
        samples: usize,
        xi: F,
        ell: G,
        radius: f64,
        delta1: f64,
    ) -> Result<Self> {
        if samples < 2 {
            return Err(CatenoidError::InvalidParameter("need at least two samples".into()));
        }
        let sigma: Vec<f64> = (0..samples).map(|k| range.0 + (range.1 - range.0) * k as f64 / (samples - 1) as f64).collect();
        let xs = sigma.iter().map(|&s| xi(s)).collect();
        let ls = sigma.iter().map(|&s| ell(s)).collect();
        Self::new(sigma, xs, ls, radius, delta1)
    }

    /// Constant velocity ℓ₀ and ξ(σ) = σℓ₀ + a₀: a boosted, translated catenoid (℘̇ = 0).
    pub fn stationary(ell0: &[f64], a0: &[f64], radius: f64, delta1: f64) -> Result<Self> {
        let (l, a) = (ell0.to_vec(), a0.to_vec());
        Self::from_fn(
            (-50.0, 150.0),
            3,
            |s| a.iter().zip(&l).map(|(a, l)| a + s * l).collect(),
            |_| l.clone(),
            radius,
            delta1,
        )
    }

    fn sample(interp: &[Monotone], s: f64) -> (Vec<f64>, Vec<f64>) {
        interp.iter().map(|m| m.eval(s)).unzip()
    }

    /// ℓ is held at its end values outside the sampled range, so extrapolation never reaches |ℓ| ≥ 1.
    fn sample_ell(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (self.sigma[0], self.sigma[self.sigma.len() - 1]);
        let (l, ld) = Self::sample(&self.ell_interp, s.clamp(a, b));
        if s < a || s > b {
            let z = vec![0.0; l.len()];
            return (l, z);
        }
        (l, ld)
    }

    pub fn xi(&self, s: f64) -> Vec<f64> {
        Self::sample(&self.xi_interp, s).0
    }

    pub fn xi_dot(&self, s: f64) -> Vec<f64> {
        Self::sample(&self.xi_interp, s).1
    }

    pub fn ell(&self, s: f64) -> Vec<f64> {
        self.sample_ell(s).0
    }

    pub fn ell_dot(&self, s: f64) -> Vec<f64> {
        self.sample_ell(s).1
    }

    pub fn gamma(&self, s: f64) -> f64 {
        let l = self.ell(s);
        1.0 / (1.0 - dot(&l, &l)).sqrt()
    }

    /// dγ/dσ = γ³ ℓ·ℓ̇.
    pub fn gamma_dot(&self, s: f64) -> f64 {
        let (l, ld) = self.sample_ell(s);
        self.gamma(s).powi(3) * dot(&l, &ld)
    }

    /// η = ξ − γRℓ.
    pub fn eta(&self, s: f64) -> Vec<f64> {
        let g = self.gamma(s);
        self.xi(s).iter().zip(self.ell(s)).map(|(x, l)| x - g * self.radius * l).collect()
    }

    pub fn eta_dot(&self, s: f64) -> Vec<f64> {
        let (g, gd) = (self.gamma(s), self.gamma_dot(s));
        let (l, ld) = self.sample_ell(s);
        let xd = self.xi_dot(s);
        (0..self.n).map(|k| xd[k] - self.radius * (gd * l[k] + g * ld[k])).collect()
    }

    /// τ = σ − γR.
    pub fn tau(&self, s: f64) -> f64 {
        s - self.gamma(s) * self.radius
    }

    pub fn tau_dot(&self, s: f64) -> f64 {
        1.0 - self.gamma_dot(s) * self.radius
    }

    /// η' = dη/dτ.
    pub fn eta_prime(&self, s: f64) -> Vec<f64> {
        let td = self.tau_dot(s);
        self.eta_dot(s).iter().map(|v| v / td).collect()
    }

    /// |℘̇| = |(ℓ̇, ξ̇ − ℓ)|.
    pub fn wp_dot(&self, s: f64) -> f64 {
        let ld = self.ell_dot(s);
        let xd = self.xi_dot(s);
        let l = self.ell(s);
        (dot(&ld, &ld) + xd.iter().zip(&l).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sqrt()
    }

    /// σ with τ(σ) = τ (τ is increasing in σ).
    pub fn sigma_of_tau(&self, tau: f64) -> Result<f64> {
        let f = |s: f64| tau - self.tau(s);
        let guess = tau + self.gamma(tau) * self.radius;
        let (lo, hi) = grow_bracket(f, guess, 1.0)?;
        Ok(bisect_root(f, lo, hi))
    }

    /// G(σ) = X⁰ − τ(σ) − √(|X' − η(σ)|² + 1); X lies on the hyperboloid of σ iff G = 0.
    pub fn leaf_defect(&self, x: &[f64], s: f64) -> f64 {
        let eta = self.eta(s);
        let d2: f64 = x[1..].iter().zip(&eta).map(|(a, b)| (a - b) * (a - b)).sum();
        x[0] - self.tau(s) - (d2 + 1.0).sqrt()
    }

    /// σ_temp(X): the hyperboloid through X.
    pub fn sigma_temp(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let f = |s: f64| self.leaf_defect(x, s);
        let (lo, hi) = grow_bracket(f, x[0], 1.0)?;
        Ok(bisect_root(f, lo, hi))
    }

    /// σ(X) = 𝔪(X⁰, σ_temp(X)).
    pub fn sigma_at(&self, x: &[f64]) -> Result<f64> {
        let st = self.sigma_temp(x)?;
        Ok(SmoothedMin { delta1: self.delta1 }.value(x[0], st))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n + 1 {
            return Err(CatenoidError::InvalidDimension(x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CatenoidError::InvalidParameter("non-finite point".into()));
        }
        Ok(())
    }

    fn check_angles(&self, theta: &[f64]) -> Result<()> {
        if theta.len() + 1 != self.n {
            return Err(CatenoidError::InvalidDimension(theta.len() + 1));
        }
        Ok(())
    }

    /// Point of the hyperboloidal chart x = (τ + ⟨r⟩, η(τ) + rΘ(θ)).
    pub fn hyperboloidal_point(&self, tau: f64, r: f64, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_angles(theta)?;
        let s = self.sigma_of_tau(tau)?;
        let eta = self.eta(s);
        let th = sphere_point(theta);
        let mut x = vec![tau + jap(r)];
        x.extend(eta.iter().zip(&th).map(|(e, t)| e + r * t));
        Ok(x)
    }

    /// Point of the leaf Σ_σ above x' = η(τ(σ)) + rΘ(θ): hyperboloidal beyond
    /// the gluing band, flat (x⁰ = σ) inside, and the 𝔪-blend in between.
    pub fn leaf_point(&self, sigma: f64, r: f64, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_angles(theta)?;
        if !(r >= 0.0) {
            return Err(CatenoidError::InvalidParameter(format!("radius {r}")));
        }
        let tau = self.tau(sigma);
        let eta = self.eta(sigma);
        let th = sphere_point(theta);
        let xs: Vec<f64> = eta.iter().zip(&th).map(|(e, t)| e + r * t).collect();
        let with_time = |t: f64| -> Vec<f64> {
            let mut x = vec![t];
            x.extend_from_slice(&xs);
            x
        };
        let hyp = tau + jap(r);
        if hyp - sigma >= self.delta1 {
            return Ok(with_time(hyp));
        }
        let flat = with_time(sigma);
        if self.sigma_temp(&flat)? - sigma >= self.delta1 {
            return Ok(flat);
        }
        // gluing band: σ(x⁰, x') is increasing in x⁰
        let f = |t: f64| self.sigma_at(&with_time(t)).map(|v| v - sigma).unwrap_or(f64::NAN);
        let (lo, hi) = grow_bracket(|t| -f(t), sigma, self.delta1)?;
        Ok(with_time(bisect_root(|t| -f(t), lo, hi)))
    }

    /// Boost frame data at σ: (Λ_ℓ, Λ_ℓ^{−1}, ξ − σℓ).
    fn boost_at(&self, s: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
        let l = self.ell(s);
        let b = boost(&l)?;
        let minus: Vec<f64> = l.iter().map(|v| -v).collect();
        let inv = boost(&minus)?.lambda;
        let shift = self.xi(s).iter().zip(&l).map(|(x, l)| x - s * l).collect();
        Ok((b.lambda, inv, shift))
    }

    /// Frame at an ambient point of the hyperboloidal region.
    pub fn frame_at_point(&self, x: &[f64]) -> Result<FrameVectors> {
        let s = self.sigma_temp(x)?;
        let (lam, inv, shift) = self.boost_at(s)?;
        let mut rel = DVector::from_column_slice(x);
        for k in 0..self.n {
            rel[k + 1] -= shift[k];
        }
        let y = &lam * rel;
        let r_tilde = y.rows(1, self.n).norm();
        if r_tilde == 0.0 {
            return Err(CatenoidError::InvalidParameter("frame undefined on the center line".into()));
        }
        let push = |v: Vec<f64>| -> Vec<f64> { (&inv * DVector::from_vec(v)).iter().copied().collect() };
        let mut e0 = vec![0.0; self.n + 1];
        e0[0] = 1.0;
        let mut lv = e0.clone();
        let mut lb = e0.clone();
        for k in 0..self.n {
            lv[k + 1] = y[k + 1] / r_tilde;
            lb[k + 1] = -y[k + 1] / r_tilde;
        }
        let mut omega = Vec::new();
        for j in 0..self.n {
            for k in j + 1..self.n {
                let mut v = vec![0.0; self.n + 1];
                v[k + 1] = y[j + 1];
                v[j + 1] = -y[k + 1];
                omega.push(((j, k), push(v)));
            }
        }
        Ok(FrameVectors { t: push(e0), l: push(lv), lbar: push(lb), omega, r_tilde, y: y.iter().copied().collect() })
    }

    /// Frame at chart point (σ, r, θ) of the hyperboloidal region.
    pub fn frame_at(&self, sigma: f64, r: f64, theta: &[f64]) -> Result<FrameVectors> {
        let x = self.hyperboloidal_point(self.tau(sigma), r, theta)?;
        self.frame_at_point(&x)
    }

    /// Columns ∂_τ, ∂_r, ∂_a of the hyperboloidal chart at (σ, r, θ).
    pub fn chart_basis(&self, sigma: f64, r: f64, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.check_angles(theta)?;
        let n = self.n;
        let ep = self.eta_prime(sigma);
        let th = sphere_point(theta);
        let tangents = sphere_tangents(theta);
        let mut j = DMatrix::zeros(n + 1, n + 1);
        j[(0, 0)] = 1.0;
        j[(0, 1)] = r / jap(r);
        for k in 0..n {
            j[(k + 1, 0)] = ep[k];
            j[(k + 1, 1)] = th[k];
            for (a, t) in tangents.iter().enumerate() {
                j[(k + 1, a + 2)] = r * t[k];
            }
        }
        Ok(j)
    }

    /// Coefficients of the frame in the (τ, r, θ) coordinate basis.
    pub fn frame_coordinates(&self, sigma: f64, r: f64, theta: &[f64]) -> Result<FrameCoordinates> {
        let f = self.frame_at(sigma, r, theta)?;
        let lu = self.chart_basis(sigma, r, theta)?.lu();
        let solve = |v: &[f64]| -> Result<Vec<f64>> {
            lu.solve(&DVector::from_column_slice(v))
                .map(|c| c.iter().copied().collect())
                .ok_or_else(|| CatenoidError::InvalidParameter("singular chart".into()))
        };
        Ok(FrameCoordinates { t: solve(&f.t)?, l: solve(&f.l)?, lbar: solve(&f.lbar)?, r_tilde: f.r_tilde })
    }
}

/// Null frame at one point, as ambient vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameVectors {
    pub t: Vec<f64>,
    pub l: Vec<f64>,
    pub lbar: Vec<f64>,
    /// Ω_{jk}, j < k.
    pub omega: Vec<((usize, usize), Vec<f64>)>,
    /// r̃ = |y'|.
    pub r_tilde: f64,
    /// Reference-hyperboloid coordinates y of the point.
    pub y: Vec<f64>,
}

impl FrameVectors {
    /// Largest deviation among m(L,L) = 0, m(L̄,L̄) = 0, m(L,L̄) = −2, m(T,T) = −1.
    pub fn identity_residual(&self) -> f64 {
        [mdot(&self.l, &self.l), mdot(&self.lbar, &self.lbar), mdot(&self.l, &self.lbar) + 2.0, mdot(&self.t, &self.t) + 1.0]
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn omega(&self, j: usize, k: usize) -> Option<Vec<f64>> {
        let (a, b, sign) = if j < k { (j, k, 1.0) } else { (k, j, -1.0) };
        self.omega.iter().find(|(p, _)| *p == (a, b)).map(|(_, v)| v.iter().map(|c| sign * c).collect())
    }
}

/// Frame coefficients in the coordinate basis (∂_τ, ∂_r, ∂_θ¹, …).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameCoordinates {
    pub t: Vec<f64>,
    pub l: Vec<f64>,
    pub lbar: Vec<f64>,
    pub r_tilde: f64,
}

/// Minkowski metric in (τ, r, θ) at a hyperboloidal point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricComponents {
    pub metric: DMatrix<f64>,
    /// |det m|^{1/2} = (1 − (r/⟨r⟩)Θ·η') r^{n−1} |g̊|^{1/2}.
    pub volume: f64,
    /// Leading part m₀^{−1} of the inverse.
    pub leading_inverse: DMatrix<f64>,
}

/// Closed-form metric components:
/// m_ττ = −(1 − |η'|²), m_τr = −r/⟨r⟩ + Θ·η', m_τa = rΘ_a·η',
/// m_rr = ⟨r⟩^{−2}, m_ra = 0, m_ab = r²g̊_ab.
pub fn minkowski_in_foliation(sigma: f64, r: f64, theta: &[f64], curves: &ParameterCurves) -> Result<MetricComponents> {
    curves.check_angles(theta)?;
    let n = curves.n;
    let ep = curves.eta_prime(sigma);
    let th = sphere_point(theta);
    let tangents = sphere_tangents(theta);
    let jr = jap(r);
    let p = dot(&th, &ep);
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = -(1.0 - dot(&ep, &ep));
    m[(0, 1)] = -r / jr + p;
    m[(1, 0)] = m[(0, 1)];
    m[(1, 1)] = 1.0 / (jr * jr);
    let round = DMatrix::from_fn(n - 1, n - 1, |a, b| dot(&tangents[a], &tangents[b]));
    for a in 0..n - 1 {
        m[(0, a + 2)] = r * dot(&tangents[a], &ep);
        m[(a + 2, 0)] = m[(0, a + 2)];
        for b in 0..n - 1 {
            m[(a + 2, b + 2)] = r * r * round[(a, b)];
        }
    }
    let det_round = round.determinant();
    let volume = (1.0 - r / jr * p) * r.powi(n as i32 - 1) * det_round.abs().sqrt();
    let round_inv = round.clone().try_inverse().ok_or_else(|| CatenoidError::InvalidParameter("angular chart singular".into()))?;
    let up: Vec<f64> = (0..n - 1).map(|a| (0..n - 1).map(|b| round_inv[(a, b)] * dot(&tangents[b], &ep)).sum()).collect();
    let mut inv = DMatrix::zeros(n + 1, n + 1);
    inv[(0, 1)] = -1.0 / (1.0 - p);
    inv[(1, 0)] = inv[(0, 1)];
    inv[(1, 1)] = (1.0 + p) / (1.0 - p);
    for a in 0..n - 1 {
        inv[(1, a + 2)] = up[a] / (r * (1.0 - p));
        inv[(a + 2, 1)] = inv[(1, a + 2)];
        for b in 0..n - 1 {
            inv[(a + 2, b + 2)] = round_inv[(a, b)] / (r * r);
        }
    }
    Ok(MetricComponents { metric: m, volume, leading_inverse: inv })
}

/// Pullback of the flat metric through the hyperboloidal chart by central differences.
pub fn pullback_metric_fd(sigma: f64, r: f64, theta: &[f64], curves: &ParameterCurves, step: f64) -> Result<DMatrix<f64>> {
    let n = curves.n;
    let tau = curves.tau(sigma);
    let mut cols = Vec::with_capacity(n + 1);
    for k in 0..n + 1 {
        let at = |d: f64| -> Result<Vec<f64>> {
            let mut th = theta.to_vec();
            match k {
                0 => curves.hyperboloidal_point(tau + d, r, &th),
                1 => curves.hyperboloidal_point(tau, r + d, &th),
                _ => {
                    th[k - 2] += d;
                    curves.hyperboloidal_point(tau, r, &th)
                }
            }
        };
        let (p, q) = (at(step)?, at(-step)?);
        cols.push(p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * step)).collect::<Vec<f64>>());
    }
    Ok(DMatrix::from_fn(n + 1, n + 1, |a, b| mdot(&cols[a], &cols[b])))
}

/// A frame field, evaluated at ambient points of the hyperboloidal region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameField {
    T,
    L,
    Lbar,
    Omega(usize, usize),
}

impl FrameField {
    pub fn at(self, curves: &ParameterCurves, x: &[f64]) -> Result<Vec<f64>> {
        let f = curves.frame_at_point(x)?;
        Ok(match self {
            FrameField::T => f.t,
            FrameField::L => f.l,
            FrameField::Lbar => f.lbar,
            FrameField::Omega(j, k) => f.omega(j, k).ok_or(CatenoidError::InvalidDimension(j.max(k) + 1))?,
        })
    }
}

/// [X, Y] applied to the coordinate functions x^μ, by central differences of
/// step `step` along the flows: [X, Y]^μ = X(Y^μ) − Y(X^μ).
pub fn commutator_check(curves: &ParameterCurves, a: FrameField, b: FrameField, x: &[f64], step: f64) -> Result<Vec<f64>> {
    let va = a.at(curves, x)?;
    let vb = b.at(curves, x)?;
    let shifted = |v: &[f64], c: f64| -> Vec<f64> { x.iter().zip(v).map(|(p, d)| p + c * d).collect() };
    let deriv = |field: FrameField, dir: &[f64]| -> Result<Vec<f64>> {
        let p = field.at(curves, &shifted(dir, step))?;
        let q = field.at(curves, &shifted(dir, -step))?;
        Ok(p.iter().zip(&q).map(|(u, v)| (u - v) / (2.0 * step)).collect())
    };
    let ab = deriv(b, &va)?;
    let ba = deriv(a, &vb)?;
    Ok(ab.iter().zip(&ba).map(|(u, v)| u - v).collect())
}

/// ∂Θ/∂θ_a for the hyperspherical parametrization of `sphere_point`.
pub fn sphere_tangents(theta: &[f64]) -> Vec<Vec<f64>> {
    let dim = theta.len() + 1;
    (0..theta.len())
        .map(|a| {
            let mut out = vec![0.0; dim];
            let mut prod = 1.0;
            for (k, th) in theta.iter().enumerate() {
                let (c, s) = if k == a { (-th.sin(), th.cos()) } else { (th.cos(), th.sin()) };
                out[k] = if k < a { 0.0 } else { prod * c };
                prod *= s;
            }
            out[dim - 1] = prod;
            out
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Grow [lo, hi] around `start` until a decreasing function changes sign.
fn grow_bracket<F: Fn(f64) -> f64>(f: F, start: f64, width: f64) -> Result<(f64, f64)> {
    let f0 = f(start);
    if f0.is_nan() {
        return Err(CatenoidError::NoBracket(format!("undefined near {start}")));
    }
    // march away from `start` towards the sign change with doubling steps
    let dir = if f0 >= 0.0 { 1.0 } else { -1.0 };
    let (mut near, mut w) = (start, width.max(1e-3));
    for _ in 0..80 {
        let far = start + dir * w;
        let v = f(far);
        if v.is_nan() {
            return Err(CatenoidError::NoBracket(format!("undefined near {far}")));
        }
        if (dir > 0.0 && v <= 0.0) || (dir < 0.0 && v >= 0.0) {
            return Ok(if dir > 0.0 { (near, far) } else { (far, near) });
        }
        near = far;
        w *= 2.0;
    }
    Err(CatenoidError::NoBracket(format!("no sign change around {start}")))
}

/// Root of a decreasing function on [lo, hi] by bisection to adjacent floats or 1e−13.
fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
