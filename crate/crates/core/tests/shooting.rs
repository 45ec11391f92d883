use std::sync::OnceLock;

use catenoid_core::evolution::{Backend, BumpSpec};
use catenoid_core::shooting::*;
use catenoid_core::CatenoidError;
use proptest::prelude::*;

const TOL: f64 = 1e-7;

fn linear_problem() -> &'static ShootingProblem {
    static P: OnceLock<ShootingProblem> = OnceLock::new();
    P.get_or_init(|| ShootingProblem::new(ShootConfig { backend: Backend::Linear, ..Default::default() }).unwrap())
}

fn linear_result() -> &'static ShootResult {
    static R: OnceLock<ShootResult> = OnceLock::new();
    R.get_or_init(|| bisect_b(linear_problem(), (-1.0, 1.0), TOL, 64).unwrap())
}

/// Synthetic exit oracle: sign of b − root, exiting at −log|b − root|.
fn synthetic(root: f64) -> impl FnMut(f64) -> catenoid_core::Result<CandidateRun> {
    move |b| {
        let d = b - root;
        let verdict = if d > 0.0 {
            Verdict::ExitHigh
        } else if d < 0.0 {
            Verdict::ExitLow
        } else {
            Verdict::TrappedToHorizon
        };
        Ok(CandidateRun {
            b,
            verdict,
            exit_time: (d != 0.0).then(|| -d.abs().ln()),
            stop: StopReason::Exit,
            times: vec![],
            a_plus: vec![],
            q: vec![],
            threshold: vec![],
            interior_sup: vec![],
        })
    }
}

#[test]
fn threshold_decays_like_inverse_cube() {
    let c = TrapConfig::new(2.0).unwrap();
    assert_eq!(c.threshold(0.0), 2.0);
    let t: f64 = 1e3;
    assert!((c.threshold(t) * t.powi(3) / 2.0 - 1.0).abs() < 1e-5);
    assert!(TrapConfig::new(0.0).is_err());
    assert!(TrapConfig::new(f64::NAN).is_err());
}

#[test]
fn vanishing_unstable_coefficient_is_trapped() {
    let c = TrapConfig::new(1e-3).unwrap();
    let times: Vec<f64> = (0..3001).map(|k| k as f64 * 0.01).collect();
    let zeros = vec![0.0; times.len()];
    let q = trap_quantity(1.7, &times, &zeros, &zeros).unwrap();
    let st = trap_monitor(&times, &q, &c).unwrap();
    assert_eq!(st.verdict, Verdict::TrappedToHorizon);
    assert!(st.exit.is_none());
    assert!(st.inside.iter().all(|v| *v));
}

#[test]
fn trap_quantity_matches_its_definition() {
    let times = [0.0, 0.5, 1.0];
    let a = [1.0, 2.0, 3.0];
    let s = [0.1, 0.2, 0.3];
    let q = trap_quantity(2.0, &times, &a, &s).unwrap();
    for k in 0..3 {
        assert!((q[k] - (2.0 * a[k] - (2.0 * times[k]).exp() * s[k])).abs() < 1e-15);
    }
    assert!(trap_quantity(2.0, &times, &a[..2], &s).is_err());
    assert!(trap_monitor(&times, &q[..2], &TrapConfig::new(1.0).unwrap()).is_err());
}

#[test]
fn entering_the_outer_half_of_the_trap_grows_until_exit() {
    let mu = 1.74;
    let c = TrapConfig::new(1e-3).unwrap();
    let times: Vec<f64> = (0..2001).map(|k| k as f64 * 0.01).collect();
    for sign in [1.0, -1.0] {
        // pure unstable growth from q(0) in (λ/2, λ)
        let a0 = sign * 0.75 * c.threshold(0.0) / mu;
        let a: Vec<f64> = times.iter().map(|t| a0 * (mu * t).exp()).collect();
        let zeros = vec![0.0; times.len()];
        let q = trap_quantity(mu, &times, &a, &zeros).unwrap();
        let st = trap_monitor(&times, &q, &c).unwrap();
        let (k, t) = st.exit.expect("must exit");
        assert!(t > 0.0 && t < 1.0, "exit at {t}");
        assert!(q[..=k].windows(2).all(|w| w[1].abs() > w[0].abs()));
        assert_eq!(st.verdict.sign() as f64, sign);
    }
}

#[test]
fn bisection_halves_exactly() {
    let res = bisect_with(synthetic(0.123456789), (-1.0, 1.0), 1e-9, 100).unwrap();
    for (k, b) in res.brackets.iter().enumerate() {
        assert_eq!(b[1] - b[0], 2.0 / 2f64.powi(k as i32));
    }
    assert!((res.b_star - 0.123456789).abs() <= 1e-9);
    assert_eq!(res.iterations, res.brackets.len() - 1);
    assert_eq!(res.exit_table.len(), res.iterations + 2);
}

#[test]
fn bisection_errors() {
    assert!(matches!(bisect_with(synthetic(5.0), (-1.0, 1.0), 1e-6, 100), Err(CatenoidError::BadBracket(-1))));
    assert!(matches!(bisect_with(synthetic(-5.0), (-1.0, 1.0), 1e-6, 100), Err(CatenoidError::BadBracket(1))));
    assert!(matches!(bisect_with(synthetic(0.3), (-1.0, 1.0), 1e-9, 10), Err(CatenoidError::BudgetExhausted(10))));
    assert!(matches!(bisect_with(synthetic(0.3), (1.0, -1.0), 1e-9, 10), Err(CatenoidError::InvalidParameter(_))));
    assert!(matches!(bisect_with(synthetic(0.3), (-1.0, 1.0), 0.0, 10), Err(CatenoidError::InvalidParameter(_))));
}

#[test]
fn trapped_candidate_ends_the_search() {
    let res = bisect_with(synthetic(0.5), (-1.0, 1.0), 1e-12, 100).unwrap();
    assert_eq!(res.b_star, 0.5);
    assert_eq!(res.exit_table.last().unwrap().verdict, Verdict::TrappedToHorizon);
    let res = bisect_with(synthetic(-1.0), (-1.0, 1.0), 1e-12, 100).unwrap();
    assert_eq!((res.b_star, res.iterations), (-1.0, 0));
}

#[test]
fn linear_backend_root_matches_the_projection_oracle() {
    let p = linear_problem();
    let res = linear_result();
    let oracle = p.projection_root().unwrap();
    assert!((res.b_star - oracle).abs() <= 2.0 * TOL, "b* {} oracle {oracle}", res.b_star);
    // the truncated test function shifts the root only by cutoff-tail effects
    assert!((p.truncated_projection_root().unwrap() - oracle).abs() < 1e-6);
    let last = res.brackets.last().unwrap();
    assert!(last[1] - last[0] <= TOL);
}

#[test]
fn exit_sign_flips_once_across_the_bracket() {
    let res = linear_result();
    let mut table = res.exit_table.clone();
    table.sort_by(|a, b| a.b.partial_cmp(&b.b).unwrap());
    let flips = table.windows(2).filter(|w| w[0].verdict != w[1].verdict).count();
    assert_eq!(flips, 1);
    assert_eq!(table[0].verdict, Verdict::ExitLow);
    assert_eq!(table.last().unwrap().verdict, Verdict::ExitHigh);
}

#[test]
fn exit_time_is_logarithmic_in_the_defect() {
    let p = linear_problem();
    let root = p.projection_root().unwrap();
    let mu = p.mu();
    let lam0 = p.trap.threshold(0.0);
    let mut prev = 0.0;
    for d in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        for b in [root + d, root - d] {
            let run = exit_time(b, p).unwrap();
            let t = run.exit_time.expect("exits");
            let defect = (mu * p.unstable_amplitude(b).unwrap()).abs();
            let bound = ((lam0 / defect).ln() / mu).max(0.0);
            assert!(t <= bound + 2.0, "b {b}: exit {t}, bound {bound}");
            assert_eq!(run.verdict.sign() as f64, (b - root).signum());
        }
        let t = exit_time(root + d, p).unwrap().exit_time.unwrap();
        assert!(t >= prev);
        prev = t;
    }
}

#[test]
fn exit_time_is_continuous_away_from_the_root() {
    let p = linear_problem();
    let b = p.projection_root().unwrap() + 1e-4;
    let (t1, t2) = exit_time_continuity(b, p).unwrap();
    let (t1, t2) = (t1.unwrap(), t2.unwrap());
    assert!((t1 - t2).abs() <= 2.0 * p.dt, "{t1} vs {t2}");
}

#[test]
fn growth_rate_near_the_root_is_mu() {
    let p = linear_problem();
    let b = linear_result().b_star;
    for s in [1.0, -1.0] {
        let run = p.run(b + s * 10.0 * TOL, true).unwrap();
        assert_eq!(run.stop, StopReason::Saturated);
        let rate = run.growth_rate().unwrap();
        assert!((rate / p.mu() - 1.0).abs() < 0.05, "rate {rate} vs {}", p.mu());
    }
}

#[test]
fn interior_decays_before_the_unstable_mode_takes_over() {
    let p = linear_problem();
    let run = p.run(linear_result().b_star, true).unwrap();
    assert!(run.interior_decay_ratio() >= 10.0, "ratio {}", run.interior_decay_ratio());
    assert!(*run.times.last().unwrap() <= p.config.horizon + 1e-9);
}

#[test]
fn reruns_are_bit_identical() {
    let p = linear_problem();
    let a = bisect_b(p, (-1.0, 1.0), 1e-4, 64).unwrap();
    let b = bisect_b(p, (-1.0, 1.0), 1e-4, 64).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.b_star.to_bits(), b.b_star.to_bits());
}

#[test]
fn nonlinear_root_is_an_order_epsilon_shift() {
    let p = ShootingProblem::new(ShootConfig::default()).unwrap();
    let res = bisect_b(&p, (-1.0, 1.0), 1e-6, 64).unwrap();
    let lin = p.projection_root().unwrap();
    let shift = (res.b_star - lin).abs();
    assert!(shift > 1e-6 && shift < 10.0 * p.config.epsilon, "shift {shift}");
    let run = p.run(res.b_star + 1e-5, true).unwrap();
    let rate = run.growth_rate().unwrap();
    assert!((rate / p.mu() - 1.0).abs() < 0.05, "rate {rate}");
}

#[test]
fn data_must_fit_inside_half_the_radius() {
    let cfg = ShootConfig { radius: 6.0, cutoff_radius: 1.5, bump: BumpSpec::default(), ..Default::default() };
    assert!(matches!(ShootingProblem::new(cfg), Err(CatenoidError::SupportError { .. })));
    let cfg = ShootConfig { epsilon: 0.0, ..Default::default() };
    assert!(ShootingProblem::new(cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bisection_brackets_the_root(root in -0.999f64..0.999, tol_exp in 3i32..12) {
        let tol = 10f64.powi(-tol_exp);
        let res = bisect_with(synthetic(root), (-1.0, 1.0), tol, 200).unwrap();
        prop_assert!((res.b_star - root).abs() <= tol);
        for w in res.brackets.windows(2) {
            prop_assert!(w[1][0] >= w[0][0] && w[1][1] <= w[0][1]);
            if w[1][0] != w[1][1] {
                prop_assert_eq!(w[1][1] - w[1][0], 0.5 * (w[0][1] - w[0][0]));
            }
        }
    }

    #[test]
    fn monitor_verdict_follows_the_first_excursion(q0 in -5.0f64..5.0, amp in 0.1f64..2.0) {
        let c = TrapConfig::new(amp).unwrap();
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let q: Vec<f64> = times.iter().map(|t| q0 * (1.0 + t)).collect();
        let st = trap_monitor(&times, &q, &c).unwrap();
        match st.exit {
            Some((k, _)) => {
                prop_assert!(q[k].abs() >= c.threshold(times[k]));
                prop_assert!(st.inside[..k].iter().all(|v| *v));
                prop_assert_eq!(st.verdict.sign() as f64, q0.signum());
            }
            None => prop_assert_eq!(st.verdict, Verdict::TrappedToHorizon),
        }
    }
}
