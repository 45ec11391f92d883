use catenoid_core::foliation::*;
use catenoid_core::geometry::{jap, sphere_point};
use catenoid_core::quadrature::linear_fit;
use catenoid_core::CatenoidError;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R: f64 = 20.0;
const D1: f64 = 1.0;

fn still() -> ParameterCurves {
    ParameterCurves::stationary(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], R, D1).unwrap()
}

/// Slowly accelerating center with a transverse wobble of size `wobble` in ξ̇ − ℓ.
fn moving(wobble: f64) -> ParameterCurves {
    ParameterCurves::from_fn(
        (-60.0, 260.0),
        641,
        |s| {
            vec![
                0.1 * s - 1.25 * (s / 25.0).cos() + 1.25,
                2.0 * (s / 40.0).sin(),
                wobble * 15.0 * (s / 15.0).sin(),
            ]
        },
        |s| vec![0.1 + 0.05 * (s / 25.0).sin(), 0.05 * (s / 40.0).cos(), 0.0],
        R,
        D1,
    )
    .unwrap()
}

/// ℓ ≡ ℓ₀ and ξ̇ = ℓ₀ + a·v, so |℘̇| = a exactly and the samples are interpolated exactly.
fn drifting(a: f64) -> ParameterCurves {
    let l0 = [0.2, -0.1, 0.05];
    let v = [0.0, 0.6, 0.8];
    ParameterCurves::from_fn(
        (-60.0, 260.0),
        3,
        |s| (0..3).map(|k| s * (l0[k] + a * v[k])).collect(),
        |_| l0.to_vec(),
        R,
        D1,
    )
    .unwrap()
}

fn random_angles(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.gen_range(0.2..std::f64::consts::PI - 0.2), rng.gen_range(0.0..2.0 * std::f64::consts::PI)]
}

fn max_abs(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[test]
fn smoothed_min_examples() {
    assert_eq!(smoothed_min(3.0, 5.0, 0.5).unwrap(), 3.0);
    assert_eq!(smoothed_min(5.0, 3.0, 0.5).unwrap(), 3.0);
    let m = SmoothedMin::new(0.8).unwrap();
    // ϱ̂(0) = 3/8
    assert!((m.value(2.0, 2.0) - (2.0 - 0.8 * 0.375 / 2.0)).abs() < 1e-15);
    assert!(SmoothedMin::new(0.0).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let (x, y) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        assert_eq!(m.value(x, y), m.value(y, x));
    }
}

#[test]
fn blend_is_c2_at_the_band_edge() {
    let h = 1e-6;
    for edge in [-1.0f64, 1.0] {
        let (vi, di) = SmoothedMin::blend(edge - edge.signum() * h);
        let (vo, dout) = SmoothedMin::blend(edge + edge.signum() * h);
        assert!((vi - vo).abs() < 1e-5 && (di - dout).abs() < 1e-5);
        let second = |s: f64| (SmoothedMin::blend(s + 1e-5).1 - SmoothedMin::blend(s - 1e-5).1) / 2e-5;
        assert!(second(edge - edge.signum() * 1e-3).abs() < 1e-2);
    }
    for k in 0..=200 {
        let s = -1.0 + k as f64 / 100.0;
        assert!(1.5 - 1.5 * s * s >= -1e-15, "convexity");
    }
}

#[test]
fn flat_region_points_use_the_time_coordinate() {
    let c = still();
    let x = [0.0, 0.3, 0.2, 0.0];
    let st = c.sigma_temp(&x).unwrap();
    assert!((st - (R - (1.0f64 + 0.13).sqrt())).abs() < 1e-11);
    assert_eq!(c.sigma_at(&x).unwrap(), 0.0);
}

#[test]
fn far_points_lie_on_the_closed_form_hyperboloid() {
    let c = still();
    let x = [10.0, 30.0, 40.0, 0.0];
    let expected = 10.0 + R - (2501.0f64).sqrt();
    assert!((c.sigma_temp(&x).unwrap() - expected).abs() < 1e-11);
    assert!((c.sigma_at(&x).unwrap() - expected).abs() < 1e-11);
}

#[test]
fn foliation_is_single_valued_and_monotone() {
    let c = moving(0.02);
    let mut worst_eta = 0.0f64;
    for &s in &c.sigma {
        let e: f64 = c.eta_prime(s).iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_eta = worst_eta.max(e);
    }
    assert!(worst_eta <= 0.3, "|η'| = {worst_eta}");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eta0 = c.eta(0.0);
    let mut checked = 0;
    while checked < 10_000 {
        let x = [rng.gen_range(0.0..60.0), rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)];
        let d: f64 = (1..4).map(|k| (x[k] - eta0[k - 1]).powi(2)).sum::<f64>();
        if x[0] + c.gamma(0.0) * R < (d + 1.0).sqrt() {
            continue;
        }
        let st = c.sigma_temp(&x).unwrap();
        assert!(c.leaf_defect(&x, st).abs() < 1e-9);
        assert!(c.leaf_defect(&x, st - 0.01) > 0.0 && c.leaf_defect(&x, st + 0.01) < 0.0);
        let mut later = x;
        later[0] += 0.05;
        assert!(c.sigma_at(&later).unwrap() > c.sigma_at(&x).unwrap());
        checked += 1;
    }
}

#[test]
fn leaf_points_round_trip() {
    let c = moving(0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let s = rng.gen_range(5.0..60.0);
        let r = rng.gen_range(0.0..50.0);
        let th = random_angles(&mut rng);
        let x = c.leaf_point(s, r, &th).unwrap();
        let back = c.sigma_at(&x).unwrap();
        assert!((back - s).abs() < 1e-9, "σ {s}, r {r}: {back}");
    }
}

#[test]
fn still_leaf_is_the_translated_unit_hyperboloid() {
    let c = still();
    for r in [22.0, 30.0, 55.0] {
        let x = c.leaf_point(40.0, r, &[0.7, 1.1]).unwrap();
        assert!((x[0] - (40.0 - R + jap(r))).abs() < 1e-12);
        let th = sphere_point(&[0.7, 1.1]);
        for k in 0..3 {
            assert!((x[k + 1] - r * th[k]).abs() < 1e-12);
        }
    }
    // inside the band the leaf is flat
    let x = c.leaf_point(40.0, 3.0, &[0.7, 1.1]).unwrap();
    assert_eq!(x[0], 40.0);
}

#[test]
fn leaf_chart_is_nondegenerate() {
    let c = moving(0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..100 {
        let (s, r) = (rng.gen_range(5.0..60.0), rng.gen_range(1.0..50.0));
        let th = random_angles(&mut rng);
        let mut cols = Vec::new();
        for k in 0..4 {
            let at = |d: f64| {
                let (mut s1, mut r1, mut t1) = (s, r, th.clone());
                match k {
                    0 => s1 += d,
                    1 => r1 += d,
                    _ => t1[k - 2] += d,
                }
                c.leaf_point(s1, r1, &t1).unwrap()
            };
            let (p, q) = (at(h), at(-h));
            cols.extend(p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * h)));
        }
        let j = nalgebra::DMatrix::from_column_slice(4, 4, &cols);
        let scale = r * r * th[0].sin();
        assert!(j.determinant().abs() / scale > 0.1, "det {} at σ {s}, r {r}", j.determinant());
    }
}

#[test]
fn null_frame_identities() {
    let c = moving(0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let f = c.frame_at(rng.gen_range(5.0..80.0), rng.gen_range(1.0..80.0), &random_angles(&mut rng)).unwrap();
        assert!(f.identity_residual() <= 1e-12, "{}", f.identity_residual());
        assert_eq!(f.omega.len(), 3);
    }
}

#[test]
fn outgoing_field_in_polar_coordinates() {
    // ℓ ≡ 0, η' ≡ 0: L = (1 − r/⟨r⟩)∂_τ + ∂_r exactly
    let c = still();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for r in [10.0f64, 20.0, 40.0] {
        let fc = c.frame_coordinates(30.0, r, &[0.9, 0.4]).unwrap();
        assert!((fc.l[1] - 1.0).abs() < 1e-12);
        assert!(fc.l[2].abs() < 1e-12 && fc.l[3].abs() < 1e-12);
        x.push(r.ln());
        y.push((fc.l[0] - 0.5 / (r * r)).abs().ln());
    }
    let slope = linear_fit(&x, &y).0;
    assert!((slope + 4.0).abs() < 0.3, "∂_τ coefficient correction slope {slope}");
    // constant boost: the ∂_r coefficient tends to γ⁻¹(1 − Θ·ℓ)⁻¹ at rate r⁻²
    let l0 = [0.3, 0.2, -0.1];
    let c = ParameterCurves::stationary(&l0, &[0.5, 0.0, 0.0], R, D1).unwrap();
    let th = [1.0, 2.0];
    let big_theta = sphere_point(&th);
    let gamma = c.gamma(0.0);
    let tl: f64 = big_theta.iter().zip(&l0).map(|(a, b)| a * b).sum();
    let limit = 1.0 / (gamma * (1.0 - tl));
    let (mut x, mut y, mut yt) = (Vec::new(), Vec::new(), Vec::new());
    for r in [10.0f64, 20.0, 40.0] {
        let fc = c.frame_coordinates(30.0, r, &th).unwrap();
        x.push(r.ln());
        y.push((fc.l[1] - limit).abs().ln());
        yt.push((fc.r_tilde / (gamma * (1.0 - tl) * r) - 1.0).abs().ln());
    }
    let slope = linear_fit(&x, &y).0;
    assert!((slope + 2.0).abs() < 0.3, "∂_r coefficient slope {slope}");
    let slope = linear_fit(&x, &yt).0;
    assert!((slope + 2.0).abs() < 0.3, "r̃ slope {slope}");
}

#[test]
fn metric_matches_the_finite_difference_pullback() {
    let c = moving(0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let (s, r) = (rng.gen_range(5.0..80.0), rng.gen_range(25.0..80.0));
        let th = random_angles(&mut rng);
        let exact = minkowski_in_foliation(s, r, &th, &c).unwrap();
        let fd = pullback_metric_fd(s, r, &th, &c, 1e-4).unwrap();
        let rel = max_abs(&(&exact.metric - &fd)) / max_abs(&exact.metric);
        assert!(rel <= 1e-6, "rel {rel} at σ {s}, r {r}");
        let gram = fd.determinant().abs().sqrt();
        assert!((gram / exact.volume - 1.0).abs() <= 1e-6, "volume {gram} vs {}", exact.volume);
    }
}

#[test]
fn metric_component_examples() {
    let c = moving(0.02);
    let s = 30.0;
    let m = minkowski_in_foliation(s, 30.0, &[1.0, 0.5], &c).unwrap();
    let ep = c.eta_prime(s);
    let tg = 1.0 / (1.0 - ep.iter().map(|v| v * v).sum::<f64>()).sqrt();
    assert!((m.metric[(0, 0)] + 1.0 / (tg * tg)).abs() < 1e-15);
    let c = still();
    for r in [5.0f64, 50.0] {
        let m = minkowski_in_foliation(s, r, &[1.0, 0.5], &c).unwrap();
        assert!((m.metric[(0, 1)] + r / jap(r)).abs() < 1e-15);
        // −r/⟨r⟩ = −1 + ½⟨r⟩⁻² + O(⟨r⟩⁻⁴)
        let q = jap(r).powi(-2);
        assert!((m.metric[(0, 1)] - (-1.0 + 0.5 * q)).abs() < q * q);
        assert!((m.metric[(1, 1)] - q).abs() < 1e-16);
    }
}

#[test]
fn inverse_approaches_its_leading_part() {
    let c = moving(0.02);
    let th = [1.2, 0.3];
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for r in [20.0f64, 40.0, 80.0] {
        let m = minkowski_in_foliation(30.0, r, &th, &c).unwrap();
        let inv = m.metric.clone().try_inverse().unwrap();
        let mut diff = &inv - &m.leading_inverse;
        // angular rows carry r⁻¹ and r⁻² factors; undo them
        for a in 2..4 {
            for k in 0..4 {
                diff[(a, k)] *= r;
                diff[(k, a)] *= r;
            }
        }
        x.push(r.ln());
        y.push(max_abs(&diff).ln());
    }
    let slope = linear_fit(&x, &y).0;
    assert!(slope < -1.7, "slope {slope}");
}

#[test]
fn commutators_vanish_for_stationary_curves() {
    let c = ParameterCurves::stationary(&[0.3, 0.1, 0.0], &[1.0, -2.0, 0.5], R, D1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let x = c.hyperboloidal_point(c.tau(rng.gen_range(10.0..50.0)), rng.gen_range(25.0..60.0), &random_angles(&mut rng)).unwrap();
        for (a, b) in [(FrameField::T, FrameField::L), (FrameField::T, FrameField::Omega(0, 1)), (FrameField::T, FrameField::Lbar)] {
            let v = commutator_check(&c, a, b, &x, 1e-3).unwrap();
            let size = v.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            assert!(size < 1e-8, "[{a:?}, {b:?}] = {size}");
        }
        // rotation algebra: [Ω₁₂, Ω₂₃] = Ω₁₃ for Ω_jk = y^j∂_k − y^k∂_j
        let v = commutator_check(&c, FrameField::Omega(0, 1), FrameField::Omega(1, 2), &x, 1e-3).unwrap();
        let o13 = FrameField::Omega(0, 2).at(&c, &x).unwrap();
        let err = v.iter().zip(&o13).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8 * (1.0 + o13.iter().fold(0.0f64, |m, e| m.max(e.abs()))), "rotation algebra error {err}");
    }
}

#[test]
fn commutators_scale_linearly_with_the_parameter_speed() {
    let x_at = |c: &ParameterCurves| c.hyperboloidal_point(c.tau(40.0), 30.0, &[1.1, 0.6]).unwrap();
    let size = |a: f64, f: FrameField, g: FrameField| {
        let c = drifting(a);
        assert!((c.wp_dot(40.0) - a).abs() < 1e-12);
        let v = commutator_check(&c, f, g, &x_at(&c), 1e-4).unwrap();
        v.iter().map(|e| e * e).sum::<f64>().sqrt()
    };
    for (f, g) in [(FrameField::T, FrameField::Omega(0, 1)), (FrameField::Lbar, FrameField::Omega(1, 2))] {
        let (big, small) = (size(1e-2, f, g), size(1e-3, f, g));
        let slope = (big / small).log10();
        assert!((slope - 1.0).abs() < 0.1, "[{f:?}, {g:?}]: {big} vs {small}, slope {slope}");
    }
}

#[test]
fn invalid_curves_are_rejected() {
    assert!(matches!(
        ParameterCurves::stationary(&[0.8, 0.7, 0.0], &[0.0; 3], R, D1),
        Err(CatenoidError::SuperluminalBoost(_))
    ));
    // rapid acceleration makes the center curve η spacelike
    let bad = ParameterCurves::from_fn((0.0, 10.0), 11, |s| vec![0.0, 0.0, 0.0 * s], |s| vec![0.5 * (s / 2.0).sin(), 0.0, 0.0], R, D1);
    assert!(matches!(bad, Err(CatenoidError::InvalidParameter(_))));
    assert!(ParameterCurves::new(vec![0.0, 0.0], vec![vec![0.0; 3]; 2], vec![vec![0.0; 3]; 2], R, D1).is_err());
    assert!(still().sigma_at(&[0.0, 1.0]).is_err());
    assert!(still().leaf_point(1.0, -1.0, &[0.0, 0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn smoothed_min_bounds(x in -10.0f64..10.0, y in -10.0f64..10.0, d in 0.01f64..3.0) {
        let m = SmoothedMin::new(d).unwrap();
        let v = m.value(x, y);
        prop_assert_eq!(v, m.value(y, x));
        prop_assert!(v <= x.min(y) + 1e-12);
        prop_assert!(v >= x.min(y) - 0.1875 * d - 1e-12);
        if (x - y).abs() > d {
            prop_assert!((v - x.min(y)).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())));
        }
        let (px, py) = m.partials(x, y);
        prop_assert!((0.0..=1.0).contains(&px) && (0.0..=1.0).contains(&py));
        prop_assert!((px + py - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolated_curves_are_monotone(steps in prop::collection::vec(0.0f64..1.0, 4..20), t in 0.0f64..1.0) {
        let mut acc = 0.0;
        let vals: Vec<f64> = steps.iter().map(|s| { acc += s; acc }).collect();
        let m = vals.len();
        let sigma: Vec<f64> = (0..m).map(|k| k as f64).collect();
        let xi: Vec<Vec<f64>> = vals.iter().map(|v| vec![0.01 * v, 0.0]).collect();
        let c = ParameterCurves::new(sigma, xi, vec![vec![0.0, 0.0]; m], R, D1).unwrap();
        let s = t * (m - 1) as f64;
        prop_assert!(c.xi(s + 1e-3)[0] >= c.xi(s)[0] - 1e-15);
        prop_assert!(c.xi_dot(s)[0] >= -1e-15);
    }
}
