use clap::Args;

use catenoid_core::diagnostics::{linear_decay_run, NormConfig};
use catenoid_core::modulation::{truncate_test_functions, SymplecticGrid};
use catenoid_core::spectrum::{radial_spectrum, Parity};
use catenoid_core::{solve_profile, BumpSpec, DecayRunConfig};

use crate::config::{parse_pair, Config};
use crate::error::{CliError, CliResult};
use crate::output::{fmt, Outputs};

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub cfl: Option<f64>,
    /// Decay-fit window lo,hi.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
}

/// Linear radial run on the continuous spectrum: diagnostics series and the
/// interior sup-norm decay fit. Fails only if the fit cannot be formed.
pub fn run(args: &EvolveArgs, cfg: &mut Config, out: &mut Outputs) -> CliResult<bool> {
    let d = DecayRunConfig::default();
    let nd = NormConfig::default();
    let window = cfg.pair("window", args.window, (d.window[0], d.window[1]))?;
    let norms = NormConfig::new(cfg.get("r_split", None, nd.r_split)?, cfg.get("alpha", None, nd.alpha)?, nd.p)?;
    let rc = DecayRunConfig {
        n: cfg.get("n", args.n, d.n)?,
        rho_max: cfg.get("rho_max", args.rho_max, d.rho_max)?,
        intervals: cfg.get("intervals", args.intervals, d.intervals)?,
        cfl: cfg.get("cfl", args.cfl, d.cfl)?,
        horizon: cfg.get("horizon", args.horizon, d.horizon)?,
        bump: BumpSpec {
            center: cfg.get("bump_center", None, d.bump.center)?,
            width: cfg.get("bump_width", None, d.bump.width)?,
            ..d.bump
        },
        sup_radius: cfg.get("sup_radius", None, d.sup_radius)?,
        sample_every: cfg.get("sample_every", None, d.sample_every)?,
        window: [window.0, window.1],
        max_residual: d.max_residual,
        norms,
    };
    if window.1 > rc.horizon {
        return Err(CliError::Usage(format!("window end {} exceeds the horizon {}", window.1, rc.horizon)));
    }

    let g = solve_profile(rc.n, rc.rho_max, rc.intervals)?;
    let spec = radial_spectrum(&g, Parity::Even)?;
    out.derive("S", g.endpoint_s);
    out.derive("mu_sq", spec.mu_sq);
    out.derive("mu_sq_grid", spec.mu_sq_grid);
    if let Ok(tf) = truncate_test_functions(&SymplecticGrid::new(&g), &spec, cfg.get("cutoff_radius", None, 5.0)?) {
        out.derive("c_pm", tf.c_pm);
    }

    let (record, fit) = linear_decay_run(&rc)?;
    for (k, v) in &record.manifest {
        out.notes.push(format!("{k} = {v}"));
    }
    let rows = record.rows.iter().map(|r| {
        vec![fmt(r.time), fmt(r.energy), fmt(r.local_energy), fmt(r.rp[0]), fmt(r.rp[1]), fmt(r.rp[2]), fmt(r.sup)]
    });
    out.csv("evolve.csv", &["t", "E", "LE", "E0", "E1", "E2", "sup"], rows)?;
    match fit {
        Ok(fit) => {
            out.json("decay_fit.json", &fit)?;
            println!(
                "sup-norm decay exponent {:.3} on [{}, {}] (residual {:.3}, {} samples)",
                fit.exponent, fit.window[0], fit.window[1], fit.residual, fit.samples
            );
            Ok(true)
        }
        Err(e) => {
            out.json("decay_fit.json", &serde_json::json!({ "error": e.to_string() }))?;
            eprintln!("decay fit failed: {e}");
            Ok(false)
        }
    }
}
