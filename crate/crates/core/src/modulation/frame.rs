//! Pointwise first-order operators on the uniformly boosted catenoid.
//!
//! Coordinates are y = (ρ, θ₁, …, θ_{n−1}). The frozen-parameter profile is
//! Ψ(t, y) = (t, ℓt + B F(y)) with B = γ^{−1}P_ℓ + P_ℓ^⊥, F the catenoid
//! embedding, and N = (γ ℓ·ν, A_ℓ ν) its unit normal. Differential operators
//! act on closures of y and are evaluated with nested central differences of
//! step δ, so every identity below holds up to O(δ²).

use nalgebra::DMatrix;

use crate::error::{CatenoidError, Result};
use crate::geometry::{self, boost, jap};

/// Scalar function of the coordinates y.
pub type Field<'a> = &'a dyn Fn(&[f64]) -> f64;
/// First-order state (ψ, ψ̇) as a function of the coordinates y.
pub type StateField<'a> = &'a dyn Fn(&[f64]) -> [f64; 2];

/// (γ − 1)/|ℓ|² written without the removable singularity at ℓ = 0.
pub fn gamma_excess_ratio(ell_sq: f64) -> f64 {
    let s = (1.0 - ell_sq).sqrt();
    1.0 / (s * (1.0 + s))
}

/// |ℓ|^{−2}(γ−1)(ℓ·ν)ℓ, the boost correction in the generalized eigenfunctions.
pub fn boost_correction(ell: &[f64], nu: &[f64]) -> Vec<f64> {
    let ell_sq: f64 = ell.iter().map(|v| v * v).sum();
    let dot: f64 = ell.iter().zip(nu).map(|(a, b)| a * b).sum();
    let k = gamma_excess_ratio(ell_sq) * dot;
    ell.iter().map(|v| k * v).collect()
}

/// ∂Θ/∂θ_a for the hyperspherical parametrization of `geometry::sphere_point`.
pub fn sphere_derivative(theta: &[f64], a: usize) -> Vec<f64> {
    let dim = theta.len() + 1;
    (0..dim)
        .map(|k| {
            let mut prod = 1.0;
            for (l, th) in theta.iter().enumerate() {
                let (f, df) = if l < k {
                    (th.sin(), th.cos())
                } else if l == k {
                    (th.cos(), -th.sin())
                } else {
                    (1.0, 0.0)
                };
                prod *= if l == a { df } else { f };
            }
            prod
        })
        .collect()
}

/// Metric data of the frozen profile at one point.
#[derive(Debug, Clone)]
pub struct PointMetric {
    /// h_{αβ}, index 0 is time.
    pub h: DMatrix<f64>,
    pub h_inv: DMatrix<f64>,
    pub sqrt_h: f64,
}

impl PointMetric {
    /// ℏ^{jk} = h^{jk} − h^{j0}h^{0k}/h^{00} for spatial j, k (0-based).
    pub fn reduced_inverse(&self, j: usize, k: usize) -> f64 {
        let hi = &self.h_inv;
        hi[(j + 1, k + 1)] - hi[(j + 1, 0)] * hi[(0, k + 1)] / hi[(0, 0)]
    }
}

/// Uniformly boosted catenoid with velocity ℓ ∈ ℝⁿ.
#[derive(Debug, Clone)]
pub struct BoostedFrame {
    pub n: usize,
    pub ell: Vec<f64>,
    pub gamma: f64,
    /// ℓ embedded in ℝ^{n+1}.
    ell_ext: Vec<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl BoostedFrame {
    pub fn new(n: usize, ell: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(CatenoidError::InvalidDimension(n));
        }
        if ell.len() != n {
            return Err(CatenoidError::InvalidParameter(format!("ell has {} components, expected {n}", ell.len())));
        }
        let mut ell_ext = ell.to_vec();
        ell_ext.push(0.0);
        let bd = boost(&ell_ext)?;
        let b = bd.a_inverse();
        Ok(Self { n, ell: ell.to_vec(), gamma: bd.gamma, ell_ext, a: bd.a, b })
    }

    fn check(&self, y: &[f64]) {
        debug_assert_eq!(y.len(), self.n);
    }

    /// ∂_jF for j = 0 (ρ) and j = 1..n−1 (angles).
    pub fn tangents(&self, y: &[f64]) -> Vec<Vec<f64>> {
        self.check(y);
        let n = self.n;
        let rho = y[0];
        let r = jap(rho);
        let theta = geometry::sphere_point(&y[1..]);
        let mut out = Vec::with_capacity(n);
        let mut d_rho: Vec<f64> = theta.iter().map(|t| rho / r * t).collect();
        d_rho.push(geometry::height_slope(n, rho));
        out.push(d_rho);
        for a in 0..n - 1 {
            let mut d = sphere_derivative(&y[1..], a);
            d.iter_mut().for_each(|v| *v *= r);
            d.push(0.0);
            out.push(d);
        }
        out
    }

    /// Unit normal ν = (z'Θ, −ρ/⟨ρ⟩)/√g of the catenoid.
    pub fn normal(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let rho = y[0];
        let sg = geometry::g_rr_at(n, rho).sqrt();
        let zp = geometry::height_slope(n, rho);
        let mut nu: Vec<f64> = geometry::sphere_point(&y[1..]).iter().map(|t| zp * t / sg).collect();
        nu.push(-rho / jap(rho) / sg);
        nu
    }

    /// ∂_jν = λ_j ∂_jF with λ₁ along ρ and λ̄ along the sphere.
    pub fn normal_derivatives(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let c = geometry::curvatures_at(self.n, y[0]);
        self.tangents(y)
            .into_iter()
            .enumerate()
            .map(|(j, t)| {
                let lam = if j == 0 { c.lambda1 } else { c.lambda_bar };
                t.into_iter().map(|v| lam * v).collect()
            })
            .collect()
    }

    /// Ambient normal N = (γℓ·ν, A_ℓν).
    pub fn ambient_normal(&self, y: &[f64]) -> Vec<f64> {
        let nu = self.normal(y);
        self.lift_normal(&nu)
    }

    fn lift_normal(&self, nu: &[f64]) -> Vec<f64> {
        let dot: f64 = self.ell_ext.iter().zip(nu).map(|(a, b)| a * b).sum();
        let mut out = vec![self.gamma * dot];
        out.extend(matvec(&self.a, nu));
        out
    }

    /// Frozen-parameter tangent vectors Ψ_{α;℘}: (1, ℓ) and (0, B∂_jF).
    pub fn profile_tangents(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.n + 1);
        let mut t0 = vec![1.0];
        t0.extend(self.ell_ext.iter().copied());
        out.push(t0);
        for t in self.tangents(y) {
            let mut v = vec![0.0];
            v.extend(matvec(&self.b, &t));
            out.push(v);
        }
        out
    }

    pub fn metric(&self, y: &[f64]) -> Result<PointMetric> {
        let tan = self.profile_tangents(y);
        let d = self.n + 1;
        let mut h = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = geometry::mdot(&tan[i], &tan[j]);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let det = h.determinant();
        if !(det < 0.0) {
            return Err(CatenoidError::InvalidParameter(format!("induced metric not Lorentzian at {y:?} (det {det})")));
        }
        let h_inv = h
            .clone()
            .try_inverse()
            .ok_or_else(|| CatenoidError::InvalidParameter(format!("degenerate metric at {y:?}")))?;
        Ok(PointMetric { h, h_inv, sqrt_h: (-det).sqrt() })
    }

    /// |II|² is invariant under the boost: n(n−1)⟨ρ⟩^{−2n}.
    pub fn ii_sq(&self, y: &[f64]) -> f64 {
        geometry::ii_sq_at(self.n, y[0])
    }

    /// L f = (1/√h)∂_j(√h ℏ^{jk}∂_k f) + |II|² f.
    pub fn apply_l(&self, f: Field, y: &[f64], delta: f64) -> Result<f64> {
        let n = self.n;
        let flux = |p: &[f64], j: usize| -> Result<f64> {
            let m = self.metric(p)?;
            let mut s = 0.0;
            for k in 0..n {
                let c = m.reduced_inverse(j, k);
                if c != 0.0 {
                    s += c * central(f, p, k, delta);
                }
            }
            Ok(m.sqrt_h * s)
        };
        let m0 = self.metric(y)?;
        let mut div = 0.0;
        for j in 0..n {
            let (yp, ym) = shifted(y, j, delta);
            div += (flux(&yp, j)? - flux(&ym, j)?) / (2.0 * delta);
        }
        Ok(div / m0.sqrt_h + self.ii_sq(y) * f(y))
    }

    /// The matrix operator
    /// M(u, p) = (−(h^{0j}/h^{00})∂_j u + p/(√h h^{00}),
    ///            −√h L u − ∂_j((h^{j0}/h^{00}) p)).
    pub fn apply_m(&self, state: StateField, y: &[f64], delta: f64) -> Result<[f64; 2]> {
        let n = self.n;
        let m0 = self.metric(y)?;
        let hi = &m0.h_inv;
        let u = |p: &[f64]| state(p)[0];
        let s0 = state(y);
        let mut first = s0[1] / (m0.sqrt_h * hi[(0, 0)]);
        for j in 0..n {
            let c = hi[(0, j + 1)] / hi[(0, 0)];
            if c != 0.0 {
                first -= c * central(&u, y, j, delta);
            }
        }
        let mut second = -m0.sqrt_h * self.apply_l(&u, y, delta)?;
        for j in 0..n {
            let (yp, ym) = shifted(y, j, delta);
            let drift = |p: &[f64]| -> Result<f64> {
                let m = self.metric(p)?;
                Ok(m.h_inv[(j + 1, 0)] / m.h_inv[(0, 0)] * state(p)[1])
            };
            second -= (drift(&yp)? - drift(&ym)?) / (2.0 * delta);
        }
        Ok([first, second])
    }

    /// ℓ·F = ⟨ρ⟩ ℓ·Θ.
    fn ell_dot_f(&self, y: &[f64]) -> f64 {
        let theta = geometry::sphere_point(&y[1..]);
        jap(y[0]) * self.ell.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Value and coordinate gradient of φ_i = (A_ℓν)^i, i < n, or of
    /// φ_{n+i} = −γ(ℓ·F)(A_ℓν)^i = −γ(ℓ·F)ν^i − γ(ℓ·F)|ℓ|^{−2}(γ−1)(ℓ·ν)ℓ^i.
    fn mode_value_gradient(&self, index: usize, y: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n;
        let i = index % n;
        let anu = matvec(&self.a, &self.normal(y));
        let dnu = self.normal_derivatives(y);
        let grad_phi: Vec<f64> = dnu.iter().map(|d| matvec(&self.a, d)[i]).collect();
        if index < n {
            return (anu[i], grad_phi);
        }
        let lf = self.ell_dot_f(y);
        let tan = self.tangents(y);
        let grad: Vec<f64> = (0..n)
            .map(|j| {
                let dlf: f64 = self.ell_ext.iter().zip(&tan[j]).map(|(a, b)| a * b).sum();
                -self.gamma * (dlf * anu[i] + lf * grad_phi[j])
            })
            .collect();
        (-self.gamma * lf * anu[i], grad)
    }

    /// Generalized eigenfunction φ⃗_k = (φ_k, φ̇_k), k ∈ 0..2n: translations for
    /// k < n, boosts for k ≥ n.
    pub fn generalized_eigenfunction(&self, index: usize, y: &[f64]) -> Result<[f64; 2]> {
        if index >= 2 * self.n {
            return Err(CatenoidError::InvalidParameter(format!("mode index {index} out of range")));
        }
        let m = self.metric(y)?;
        let (val, grad) = self.mode_value_gradient(index, y);
        let mut dot = m.sqrt_h * (0..self.n).map(|j| m.h_inv[(0, j + 1)] * grad[j]).sum::<f64>();
        if index >= self.n {
            let (phi_i, _) = self.mode_value_gradient(index - self.n, y);
            dot += m.sqrt_h * m.h_inv[(0, 0)] * phi_i;
        }
        Ok([val, dot])
    }

    /// The zeroth-order coefficient B in ψ̇ (terms removed from the momentum).
    /// Every term pairs ∂_jN or N with tangents weighted by (h^{−1})^{0·}.
    pub fn b_coefficient(&self, y: &[f64]) -> Result<f64> {
        let n = self.n;
        let m = self.metric(y)?;
        let hi = &m.h_inv;
        let nn = self.ambient_normal(y);
        let tan = self.profile_tangents(y);
        let dnu = self.normal_derivatives(y);
        let dn: Vec<Vec<f64>> = dnu.iter().map(|d| self.lift_normal(d)).collect();
        let t_n: Vec<f64> = tan.iter().map(|t| geometry::mdot(t, &nn)).collect();
        let mut s = 0.0;
        for j in 0..n {
            s += hi[(0, j + 1)] * geometry::mdot(&dn[j], &nn);
            for a in 0..=n {
                for nu in 0..=n {
                    let t1 = geometry::mdot(&tan[a], &dn[j]) * t_n[nu];
                    s -= hi[(0, a)] * hi[(j + 1, nu)] * t1;
                    s -= hi[(0, j + 1)] * hi[(a, nu)] * geometry::mdot(&dn[j], &tan[a]) * t_n[nu];
                    s += hi[(a, j + 1)] * hi[(0, nu)] * t1;
                }
            }
        }
        Ok(m.sqrt_h * s)
    }

    /// Forcing η((ℓ̇·∇_ℓ + (ξ̇−ℓ)·∇_ξ)Ψ, N) = Σ(ξ̇−ℓ)_iφ_i + Σℓ̇_iφ_{n+i}.
    pub fn parameter_forcing(&self, y: &[f64], xi_dot_minus_ell: &[f64], ell_dot: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                xi_dot_minus_ell[i] * self.mode_value_gradient(i, y).0
                    + ell_dot[i] * self.mode_value_gradient(self.n + i, y).0
            })
            .sum()
    }

    /// Momentum at linear order:
    /// ψ̇ = √h h^{00}(∂_tψ + K) + √h h^{0j}∂_jψ − Bψ, with K the parameter forcing.
    pub fn momentum_variable(
        &self,
        y: &[f64],
        psi: f64,
        dt_psi: f64,
        grad_psi: &[f64],
        xi_dot_minus_ell: &[f64],
        ell_dot: &[f64],
    ) -> Result<f64> {
        let m = self.metric(y)?;
        let k = self.parameter_forcing(y, xi_dot_minus_ell, ell_dot);
        let drift: f64 = (0..self.n).map(|j| m.h_inv[(0, j + 1)] * grad_psi[j]).sum();
        Ok(m.sqrt_h * (m.h_inv[(0, 0)] * (dt_psi + k) + drift) - self.b_coefficient(y)? * psi)
    }

    /// Inverse of `momentum_variable`: ∂_tψ from ψ̇.
    pub fn time_derivative(
        &self,
        y: &[f64],
        psi: f64,
        psi_dot: f64,
        grad_psi: &[f64],
        xi_dot_minus_ell: &[f64],
        ell_dot: &[f64],
    ) -> Result<f64> {
        let m = self.metric(y)?;
        let h00 = m.h_inv[(0, 0)];
        let k = self.parameter_forcing(y, xi_dot_minus_ell, ell_dot);
        let drift: f64 = (0..self.n).map(|j| m.h_inv[(0, j + 1)] * grad_psi[j]).sum();
        Ok((psi_dot + self.b_coefficient(y)? * psi) / (m.sqrt_h * h00) - drift / h00 - k)
    }
}

fn matvec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum()).collect()
}

fn shifted(y: &[f64], j: usize, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut yp = y.to_vec();
    let mut ym = y.to_vec();
    yp[j] += delta;
    ym[j] -= delta;
    (yp, ym)
}

fn central(f: Field, y: &[f64], j: usize, delta: f64) -> f64 {
    let (yp, ym) = shifted(y, j, delta);
    (f(&yp) - f(&ym)) / (2.0 * delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_is_unit_and_orthogonal() {
        let fr = BoostedFrame::new(4, &[0.2, -0.1, 0.3, 0.0]).unwrap();
        let y = [0.7, 1.1, 0.4, 2.0];
        let nn = fr.ambient_normal(&y);
        assert!((geometry::mdot(&nn, &nn) - 1.0).abs() < 1e-13);
        for t in fr.profile_tangents(&y) {
            assert!(geometry::mdot(&t, &nn).abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_derivative_matches_difference() {
        let th = [0.4, 1.3, 2.2];
        for a in 0..3 {
            let mut p = th;
            let mut m = th;
            p[a] += 1e-6;
            m[a] -= 1e-6;
            let fd: Vec<f64> = geometry::sphere_point(&p)
                .iter()
                .zip(geometry::sphere_point(&m))
                .map(|(x, y)| (x - y) / 2e-6)
                .collect();
            let an = sphere_derivative(&th, a);
            for (x, y) in fd.iter().zip(&an) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
