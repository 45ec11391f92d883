use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use catenoid_core::foliation::{commutator_check, minkowski_in_foliation, pullback_metric_fd, FrameField};
use catenoid_core::ParameterCurves;

use crate::config::Config;
use crate::error::CliResult;
use crate::output::{number, Outputs};

#[derive(Debug, Args)]
pub struct FoliationArgs {
    /// Frame and metric sample points.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Spacetime points for the single-valuedness check.
    #[arg(long, default_value_t = 10_000)]
    pub leaf_samples: usize,
    /// Transverse wobble amplitude of the center curve.
    #[arg(long, default_value_t = 0.02)]
    pub wobble: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Frame identities above this fail the command.
pub const IDENTITY_TOL: f64 = 1e-10;
const METRIC_TOL: f64 = 1e-6;

/// Slowly accelerating, boosted center curve with a transverse wobble.
fn moving(wobble: f64, radius: f64, delta1: f64) -> catenoid_core::Result<ParameterCurves> {
    ParameterCurves::from_fn(
        (-60.0, 260.0),
        641,
        |s| vec![0.1 * s - 1.25 * (s / 25.0).cos() + 1.25, 2.0 * (s / 40.0).sin(), wobble * 15.0 * (s / 15.0).sin()],
        |s| vec![0.1 + 0.05 * (s / 25.0).sin(), 0.05 * (s / 40.0).cos(), 0.0],
        radius,
        delta1,
    )
}

fn angles(rng: &mut ChaCha8Rng) -> [f64; 2] {
    [rng.gen_range(0.2..std::f64::consts::PI - 0.2), rng.gen_range(0.0..2.0 * std::f64::consts::PI)]
}

#[derive(serde::Serialize)]
struct Item {
    check: &'static str,
    value: serde_json::Value,
    tolerance: f64,
    pass: bool,
}

pub fn run(args: &FoliationArgs, cfg: &mut Config, out: &mut Outputs) -> CliResult<bool> {
    let radius = cfg.get("radius", None, 20.0)?;
    let delta1 = cfg.get("delta1", None, 1.0)?;
    let seed = cfg.get("seed", args.seed, 5u64)?;
    cfg.record("wobble", args.wobble);
    cfg.record("samples", args.samples);
    cfg.record("leaf_samples", args.leaf_samples);
    let c = moving(args.wobble, radius, delta1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::new();

    let mut ident = 0.0f64;
    let mut metric = 0.0f64;
    for _ in 0..args.samples {
        let f = c.frame_at(rng.gen_range(5.0..80.0), rng.gen_range(1.0..80.0), &angles(&mut rng))?;
        ident = ident.max(f.identity_residual());
        let (s, r, th) = (rng.gen_range(5.0..80.0), rng.gen_range(25.0..80.0), angles(&mut rng));
        let exact = minkowski_in_foliation(s, r, &th, &c)?;
        let fd = pullback_metric_fd(s, r, &th, &c, 1e-4)?;
        metric = metric.max((&exact.metric - &fd).amax() / exact.metric.amax());
    }
    items.push(Item { check: "null_frame_identities", value: number(ident), tolerance: IDENTITY_TOL, pass: ident <= IDENTITY_TOL });
    items.push(Item { check: "metric_vs_fd_pullback", value: number(metric), tolerance: METRIC_TOL, pass: metric <= METRIC_TOL });

    // constant boost, ξ̇ = ℓ₀ + a·v̂: commutators with T scale like |℘̇| = a
    let l0 = [0.2, -0.1, 0.05];
    let v = [0.0, 0.6, 0.8];
    let mut sizes = Vec::new();
    for a in [1e-2, 1e-3] {
        let c = ParameterCurves::from_fn((-60.0, 260.0), 3, |s| (0..3).map(|k| s * (l0[k] + a * v[k])).collect(), |_| l0.to_vec(), radius, delta1)?;
        let x = c.hyperboloidal_point(c.tau(40.0), 30.0, &[1.1, 0.6])?;
        let w = commutator_check(&c, FrameField::T, FrameField::Omega(0, 1), &x, 1e-4)?;
        sizes.push(w.iter().map(|e| e * e).sum::<f64>().sqrt());
    }
    let exponent = (sizes[0] / sizes[1]).log10();
    items.push(Item { check: "commutator_scaling_exponent", value: number(exponent), tolerance: 0.1, pass: (exponent - 1.0).abs() <= 0.1 });

    let eta0 = c.eta(0.0);
    let gamma0 = c.gamma(0.0);
    let (mut checked, mut bad) = (0usize, 0usize);
    while checked < args.leaf_samples {
        let x = [rng.gen_range(0.0..60.0), rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)];
        let d: f64 = (1..4).map(|k| (x[k] - eta0[k - 1]).powi(2)).sum();
        if x[0] + gamma0 * radius < (d + 1.0).sqrt() {
            continue;
        }
        checked += 1;
        let ok = (|| -> catenoid_core::Result<bool> {
            let st = c.sigma_temp(&x)?;
            let mut later = x;
            later[0] += 0.05;
            Ok(c.leaf_defect(&x, st).abs() < 1e-9
                && c.leaf_defect(&x, st - 0.01) > 0.0
                && c.leaf_defect(&x, st + 0.01) < 0.0
                && c.sigma_at(&later)? > c.sigma_at(&x)?)
        })()
        .unwrap_or(false);
        bad += usize::from(!ok);
    }
    items.push(Item { check: "single_valued_failures", value: bad.into(), tolerance: 0.0, pass: bad == 0 });

    for it in &items {
        println!("{} {}: {} (tolerance {:e})", if it.pass { "ok  " } else { "FAIL" }, it.check, it.value, it.tolerance);
    }
    let ok = items.iter().all(|i| i.pass);
    out.json("foliation_check.json", &items)?;
    Ok(ok)
}
