use catenoid_core::geometry::{self, jap};
use catenoid_core::quadrature::{self, convergence_slope};
use catenoid_core::spectrum::{self, Parity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Radial eigenvalue ODE (a u')' = w(λ − V)u shot inward from a Dirichlet
/// endpoint with RK4; returns p = a u' at the neck.
fn shoot(n: usize, lambda: f64, rho_max: f64, steps: usize) -> f64 {
    let a = |r: f64| geometry::flux_coeff_at(n, r);
    let w = |r: f64| geometry::volume_weight_at(n, r);
    let v = |r: f64| spectrum::effective_potential(n, 0, r);
    let rhs = |r: f64, u: f64, p: f64| (p / a(r), w(r) * (lambda - v(r)) * u);
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
        // renormalize; only the sign of p(0)/u(0) matters
        let s = u.abs().max(p.abs());
        if s > 1e100 {
            u /= s;
            p /= s;
        }
    }
    p / u.abs()
}

/// Even bound state: bisect λ on the sign of the neck log-derivative.
fn shooting_oracle(n: usize, rho_max: f64) -> f64 {
    let steps = (rho_max * 1000.0) as usize;
    quadrature::bisect(|l| shoot(n, l, rho_max, steps), 0.05, 25.0, 1e-13).unwrap()
}

#[test]
fn shooting_oracle_frozen_value() {
    // agrees with an independent scipy solve of the same ODE
    let l = shooting_oracle(5, 40.0);
    assert!((l - 3.025_407_065_890_482).abs() < 1e-9, "{l}");
}

#[test]
fn single_positive_eigenvalue_and_oracle_agreement() {
    let g = geometry::solve_profile(5, 40.0, 4096).unwrap();
    let op = spectrum::assemble_operator(&g, 0, Parity::Even);
    let (d, e) = op.symmetric_tridiagonal();
    assert_eq!(spectrum::sturm_count(&d, &e, 1e-6), op.len() - 1);
    let data = spectrum::radial_spectrum(&g, Parity::Even).unwrap();
    let oracle = shooting_oracle(5, 40.0);
    assert!(((data.mu_sq - oracle) / oracle).abs() <= 1e-6, "{} vs {oracle}", data.mu_sq);
    // the raw grid value is second-order close
    assert!(((data.mu_sq_grid - oracle) / oracle).abs() <= 1e-3);
}

#[test]
fn sector_counting_small_dimensions() {
    for n in 3..=5 {
        let g = geometry::solve_profile(n, 40.0, 2048).unwrap();
        let even = spectrum::assemble_operator(&g, 0, Parity::Even);
        let (d, e) = even.symmetric_tridiagonal();
        assert_eq!(spectrum::sturm_count(&d, &e, 1e-6), even.len() - 1, "n={n}");
        let odd = spectrum::assemble_operator(&g, 0, Parity::Odd);
        let (d, e) = odd.symmetric_tridiagonal();
        assert_eq!(spectrum::sturm_count(&d, &e, 1e-6), odd.len(), "n={n} odd");
        for l in 2..=4 {
            let op = spectrum::assemble_operator(&g, l, Parity::Full);
            let (d, e) = op.symmetric_tridiagonal();
            assert_eq!(spectrum::sturm_count(&d, &e, -1e-6), op.len(), "n={n} l={l}");
        }
    }
}

#[test]
fn translation_sector_eigenvalue_converges_to_zero() {
    let mut hs = Vec::new();
    let mut vals = Vec::new();
    for &n_int in &[1024usize, 2048, 4096] {
        let g = geometry::solve_profile(5, 40.0, n_int).unwrap();
        let op = spectrum::assemble_operator(&g, 1, Parity::Full);
        let top = spectrum::eigen_solve(&op, 1).unwrap();
        hs.push(g.spacing());
        vals.push(top[0].value.abs());
    }
    let slope = convergence_slope(&hs, &vals);
    assert!((slope - 2.0).abs() <= 0.2, "slope {slope}, values {vals:?}");
}

#[test]
fn eigenvalues_sorted_and_normalized() {
    let g = geometry::solve_profile(4, 20.0, 512).unwrap();
    let op = spectrum::assemble_operator(&g, 0, Parity::Full);
    let pairs = spectrum::eigen_solve(&op, 4).unwrap();
    for w in pairs.windows(2) {
        assert!(w[0].value > w[1].value);
    }
    for p in &pairs {
        assert!((op.inner(&p.vector, &p.vector) - 1.0).abs() < 1e-12);
        let hv = op.apply(&p.vector);
        let res: f64 = hv.iter().zip(&p.vector).map(|(a, b)| (a - p.value * b).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-6, "residual {res}");
    }
    for i in 0..4 {
        for j in 0..i {
            assert!(op.inner(&pairs[i].vector, &pairs[j].vector).abs() < 1e-9);
        }
    }
}

#[test]
fn operator_is_symmetric_in_weighted_product() {
    let g = geometry::solve_profile(5, 20.0, 1024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for parity in [Parity::Full, Parity::Even, Parity::Odd] {
        for l in 0..3 {
            let op = spectrum::assemble_operator(&g, l, parity);
            let bump = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                op.nodes.iter().map(|&r| if r.abs() < 10.0 { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect()
            };
            let (u, v) = (bump(&mut rng), bump(&mut rng));
            let (hu, hv) = (op.apply(&u), op.apply(&v));
            let defect = (op.inner(&hu, &v) - op.inner(&u, &hv)).abs();
            let scale = op.inner(&hu, &hu).sqrt() * op.inner(&v, &v).sqrt() + op.inner(&hv, &hv).sqrt() * op.inner(&u, &u).sqrt();
            assert!(defect <= 1e-13 * scale, "{parity:?} l={l}: {defect} vs {scale}");
        }
    }
}

fn interior_residual(n_int: usize, l: usize, profile: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = geometry::solve_profile(5, 20.0, n_int).unwrap();
    let u: Vec<f64> = g.grid.iter().map(|&r| profile(r)).collect();
    let hu = spectrum::stencil_apply(&g, l, &u);
    let res = g.grid[1..g.n_intervals]
        .iter()
        .zip(&hu)
        .filter(|(r, _)| r.abs() <= 10.0)
        .fold(0.0f64, |a, (_, v)| a.max(v.abs()));
    (g.spacing(), res)
}

#[test]
fn zero_mode_residuals_converge_at_second_order() {
    for (l, f) in [
        (1usize, spectrum::translation_mode_profile as fn(usize, f64) -> f64),
        (0usize, spectrum::vertical_mode_profile),
    ] {
        let (hs, rs): (Vec<f64>, Vec<f64>) = [400usize, 800, 1600].iter().map(|&m| interior_residual(m, l, |r| f(5, r))).unzip();
        let slope = convergence_slope(&hs, &rs);
        assert!((slope - 2.0).abs() <= 0.2, "l={l}: slope {slope} from {rs:?}");
    }
}

#[test]
fn zero_mode_profiles() {
    assert_eq!(spectrum::translation_mode_profile(5, 0.0), 1.0);
    let g = geometry::solve_profile(5, 10.0, 64).unwrap();
    let z = spectrum::zero_modes(&g);
    assert_eq!(z.translation[g.center()], 1.0);
    assert_eq!(z.vertical[g.center()], 0.0);
    // e_{n+1} is odd and tends to ±1
    assert!((spectrum::vertical_mode_profile(5, 1e3) - 1.0).abs() < 1e-10);
    assert_eq!(spectrum::vertical_mode_profile(5, -2.0), -spectrum::vertical_mode_profile(5, 2.0));
}

/// Integral of Θ^iΘ^j over S^{n−1} by nested adaptive quadrature in
/// hyperspherical angles.
fn sphere_moment(n: usize, i: usize, j: usize) -> f64 {
    fn nest(n: usize, i: usize, j: usize, fixed: &[f64]) -> f64 {
        let k = fixed.len();
        let last = k == n - 2;
        let hi = if last { 2.0 * std::f64::consts::PI } else { std::f64::consts::PI };
        let f = |th: f64| {
            let mut angles = fixed.to_vec();
            angles.push(th);
            let jac = th.sin().powi((n - 2 - k) as i32);
            if last {
                let t = geometry::sphere_point(&angles);
                jac * t[i] * t[j]
            } else {
                jac * nest(n, i, j, &angles)
            }
        };
        quadrature::integrate(f, 0.0, hi, 1e-15, 1e-13).unwrap()
    }
    nest(n, i, j, &[])
}

#[test]
fn translation_modes_are_orthogonal() {
    let n = 4;
    let radial = quadrature::integrate(
        |r| spectrum::translation_mode_profile(n, r).powi(2) * geometry::volume_weight_at(n, r),
        -200.0,
        200.0,
        1e-14,
        1e-12,
    )
    .unwrap();
    let area = 2.0 * std::f64::consts::PI * std::f64::consts::PI; // |S³|
    for i in 0..n {
        for j in 0..n {
            let m = sphere_moment(n, i, j) * radial;
            if i == j {
                assert!((m - radial * area / n as f64).abs() < 1e-9 * m, "({i},{i}) = {m}");
                assert!(m > 0.0);
            } else {
                assert!(m.abs() <= 1e-10, "({i},{j}) = {m}");
            }
        }
    }
}

#[test]
fn vertical_mode_is_not_square_integrable() {
    let n = 5;
    let plain = |rm: f64| quadrature::integrate(|r| spectrum::vertical_mode_profile(n, r).powi(2), -rm, rm, 1e-12, 1e-12).unwrap();
    let (a, b, c) = (plain(20.0), plain(40.0), plain(80.0));
    // grows linearly in rho_max in the coordinate measure dρ
    assert!(((c - b) / (b - a) - 2.0).abs() < 0.01);
    // and like rho_max^n in the volume measure
    let vol = |rm: f64| {
        quadrature::integrate(
            |r| spectrum::vertical_mode_profile(n, r).powi(2) * geometry::volume_weight_at(n, r),
            -rm,
            rm,
            1e-12,
            1e-12,
        )
        .unwrap()
    };
    let s = convergence_slope(&[20.0, 40.0, 80.0], &[vol(20.0), vol(40.0), vol(80.0)]);
    assert!((s - n as f64).abs() < 0.05, "{s}");
}

#[test]
fn continuous_projector_properties() {
    let g = geometry::solve_profile(5, 40.0, 2048).unwrap();
    let data = spectrum::radial_spectrum(&g, Parity::Full).unwrap();
    let op = &data.op;
    let pc = |u: &[f64]| spectrum::project_continuous(u, op, &data.bound_states).unwrap();
    let p = pc(&data.phi_mu);
    assert!(p.iter().all(|v| v.abs() <= 1e-12));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u: Vec<f64> = op.nodes.iter().map(|&r| rng.gen_range(-1.0..1.0) * (-(r * r) / 50.0).exp()).collect();
    let pu = pc(&u);
    let ppu = pc(&pu);
    assert!(pu.iter().zip(&ppu).all(|(a, b)| (a - b).abs() <= 1e-12));
    let c = op.inner(&u, &data.phi_mu);
    for i in 0..u.len() {
        assert!((u[i] - pu[i] - c * data.phi_mu[i]).abs() <= 1e-12);
    }
    assert!(spectrum::project_continuous(&u[1..], op, &data.bound_states).is_err());
}

#[test]
fn eigenfunction_decay_rate() {
    let g = geometry::solve_profile(5, 40.0, 4096).unwrap();
    let data = spectrum::radial_spectrum(&g, Parity::Even).unwrap();
    let mu = data.mu_sq.sqrt();
    let rate = spectrum::fit_exponential_rate(&data.op, &data.phi_mu, 10.0, 30.0).unwrap();
    assert!(rate < 0.0);
    assert!((rate / -mu - 1.0).abs() < 0.1, "rate {rate} vs mu {mu}");
    let half = spectrum::fit_exponential_rate(&data.op, &data.phi_mu, 10.0, 20.0).unwrap();
    assert!((half / rate - 1.0).abs() < 0.05, "{half} vs {rate}");
    assert!(spectrum::fit_exponential_rate(&data.op, &data.phi_mu, 50.0, 60.0).is_err());
}

#[test]
fn bound_state_independent_of_truncation() {
    let vals: Vec<f64> = [30.0, 40.0, 60.0]
        .iter()
        .map(|&rm: &f64| {
            let n_int = (rm * 51.2) as usize * 2;
            let g = geometry::solve_profile(5, rm, n_int).unwrap();
            spectrum::radial_spectrum(&g, Parity::Even).unwrap().mu_sq
        })
        .collect();
    for v in &vals[1..] {
        assert!((v / vals[0] - 1.0).abs() <= 1e-5, "{vals:?}");
    }
}

#[test]
fn neck_weight_limits() {
    let n = 5;
    assert!((geometry::volume_weight_at(n, 0.0) - 0.5).abs() < 1e-15);
    assert!((geometry::flux_coeff_at(n, 0.0) - 2.0).abs() < 1e-15);
    assert!(jap(0.0) == 1.0);
}
