use clap::Args;

use catenoid_core::quadrature::convergence_slope;
use catenoid_core::spectrum::{self, assemble_operator, radial_spectrum, Parity};
use catenoid_core::{oracles, solve_profile, Result as CoreResult};

use crate::config::Config;
use crate::error::CliResult;
use crate::output::{fmt, Outputs};

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
    /// Eigenvalues per sector in the table.
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    /// Highest spherical-harmonic index tabulated.
    #[arg(long, default_value_t = 3)]
    pub max_harmonic: usize,
    /// Also emit the convergence ladder (grids N/4, N/2, N).
    #[arg(long)]
    pub ladder: bool,
}

/// Sector eigentables and μ² against the shooting oracle. Fails unless the
/// ℓ_h = 0 even sector has exactly one eigenvalue above 1e−6 and μ² matches the
/// oracle to 1e−6 relative; with `--ladder`, also unless both slopes are 2 ± 0.2.
pub fn run(args: &SpectrumArgs, cfg: &mut Config, out: &mut Outputs) -> CliResult<bool> {
    let n = cfg.get("n", args.n, 5usize)?;
    let rho_max = cfg.get("rho_max", args.rho_max, 40.0)?;
    let intervals = cfg.get("intervals", args.intervals, 4096usize)?;
    let g = solve_profile(n, rho_max, intervals)?;

    let mut rows = Vec::new();
    let mut sectors = vec![(0usize, Parity::Even), (0, Parity::Odd)];
    sectors.extend((1..=args.max_harmonic).map(|l| (l, Parity::Full)));
    let mut positive = 0;
    for (l, parity) in sectors {
        let op = assemble_operator(&g, l, parity);
        let (d, e) = op.symmetric_tridiagonal();
        let above = op.len() - spectrum::sturm_count(&d, &e, 1e-6);
        if l == 0 && parity == Parity::Even {
            positive = above;
        }
        for (k, pair) in spectrum::eigen_solve(&op, args.count.min(op.len()))?.iter().enumerate() {
            rows.push(vec![l.to_string(), format!("{parity:?}").to_lowercase(), k.to_string(), fmt(pair.value), above.to_string()]);
        }
    }
    out.csv(&format!("spectrum_n{n}.csv"), &["harmonic", "parity", "index", "eigenvalue", "count_above_1e-6"], rows)?;

    let data = radial_spectrum(&g, Parity::Even)?;
    let oracle = oracles::bound_state(n, rho_max)?;
    let rel = ((data.mu_sq - oracle) / oracle).abs();
    out.derive("mu_sq", data.mu_sq);
    out.derive("mu_sq_grid", data.mu_sq_grid);
    out.derive("mu_sq_oracle", oracle);
    out.derive("S", g.endpoint_s);
    let mut ok = positive == 1 && rel <= 1e-6;
    let mut summary = serde_json::json!({
        "n": n,
        "positive_even_radial": positive,
        "mu_sq": data.mu_sq,
        "mu_sq_grid": data.mu_sq_grid,
        "mu_sq_oracle": oracle,
        "relative_error": rel,
    });
    println!("n = {n}: μ² = {} (oracle {oracle}, rel {rel:.2e}); positive ℓ_h=0 even eigenvalues: {positive}", data.mu_sq);

    if args.ladder {
        if intervals % 8 != 0 {
            return Err(crate::error::CliError::Usage("--ladder needs intervals divisible by 8".into()));
        }
        let levels = [intervals / 4, intervals / 2, intervals];
        let ladder: Vec<(f64, f64, f64, f64)> = std::thread::scope(|s| {
            let handles: Vec<_> = levels.iter().map(|&m| s.spawn(move || ladder_level(n, rho_max, m))).collect();
            handles.into_iter().map(|h| h.join().expect("ladder worker")).collect::<CoreResult<Vec<_>>>()
        })?;
        let hs: Vec<f64> = ladder.iter().map(|r| r.0).collect();
        let col = |k: usize| -> Vec<f64> { ladder.iter().map(|r| [r.1, r.2, r.3][k]).collect() };
        let slopes = [convergence_slope(&hs, &col(0)), convergence_slope(&hs, &col(1)), convergence_slope(&hs, &col(2))];
        let rows = levels.iter().zip(&ladder).map(|(m, r)| vec![m.to_string(), fmt(r.0), fmt(r.1), fmt(r.2), fmt(r.3)]);
        out.csv(
            &format!("ladder_n{n}.csv"),
            &["intervals", "h", "translation_eigenvalue", "translation_residual", "vertical_residual"],
            rows,
        )?;
        ok &= slopes.iter().all(|s| (s - 2.0).abs() <= 0.2);
        summary["ladder_slopes"] = serde_json::json!({
            "translation_eigenvalue": slopes[0],
            "translation_residual": slopes[1],
            "vertical_residual": slopes[2],
        });
        println!("ladder slopes: eigenvalue {:.3}, e_j residual {:.3}, e_(n+1) residual {:.3}", slopes[0], slopes[1], slopes[2]);
    }
    out.json(&format!("spectrum_n{n}.json"), &summary)?;
    Ok(ok)
}

/// (h, |top ℓ_h=1 eigenvalue|, e_j residual, e_{n+1} residual) on one grid; residuals over |ρ| ≤ 10.
fn ladder_level(n: usize, rho_max: f64, intervals: usize) -> CoreResult<(f64, f64, f64, f64)> {
    let g = solve_profile(n, rho_max, intervals)?;
    let op = assemble_operator(&g, 1, Parity::Full);
    let top = spectrum::eigen_solve(&op, 1)?[0].value.abs();
    let residual = |l: usize, f: fn(usize, f64) -> f64| {
        let u: Vec<f64> = g.grid.iter().map(|&r| f(n, r)).collect();
        let hu = spectrum::stencil_apply(&g, l, &u);
        g.grid[1..g.n_intervals].iter().zip(&hu).filter(|(r, _)| r.abs() <= 10.0).fold(0.0f64, |a, (_, v)| a.max(v.abs()))
    };
    Ok((
        g.spacing(),
        top,
        residual(1, spectrum::translation_mode_profile),
        residual(0, spectrum::vertical_mode_profile),
    ))
}
