use clap::Args;

use catenoid_core::geometry::{self, jap};
use catenoid_core::{oracles, solve_profile};

use crate::config::Config;
use crate::error::CliResult;
use crate::output::{fmt, number, Outputs};

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Dimensions to tabulate, comma separated (default: config `n`, else 5).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
}

/// Profile, metric and |II|² tables plus the height endpoint S for each n.
/// Fails if |II|²⟨ρ⟩^{2n} drifts from n(n−1) by more than 1e−10 relative or
/// S disagrees with the Simpson oracle by more than 1e−10 relative.
pub fn run(args: &GeometryArgs, cfg: &mut Config, out: &mut Outputs) -> CliResult<bool> {
    let ns = if args.n.is_empty() { vec![cfg.get("n", None, 5usize)?] } else { args.n.clone() };
    cfg.record("n", ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    let rho_max = cfg.get("rho_max", args.rho_max, 40.0)?;
    let intervals = cfg.get("intervals", args.intervals, 4096usize)?;
    let mut ok = true;
    for &n in &ns {
        let g = solve_profile(n, rho_max, intervals)?;
        let target = (n * (n - 1)) as f64;
        let scaling = g
            .grid
            .iter()
            .zip(&g.second_fundamental_sq)
            .fold(0.0f64, |m, (&r, &ii)| m.max((ii * jap(r).powi(2 * n as i32) / target - 1.0).abs()));
        let rows = (0..g.grid.len()).map(|i| {
            let r = g.grid[i];
            vec![fmt(r), fmt(g.height[i]), fmt(jap(r)), fmt(g.g_rr[i]), fmt(g.volume_weight[i]), fmt(g.second_fundamental_sq[i])]
        });
        out.csv(&format!("geometry_n{n}.csv"), &["rho", "z", "radius", "g_rho_rho", "volume_weight", "ii_sq"], rows)?;

        let z_end = g.height.last().copied().unwrap_or(f64::NAN);
        let mut rec = serde_json::Map::new();
        rec.insert("n".into(), n.into());
        rec.insert("S".into(), number(g.endpoint_s));
        rec.insert("z_at_rho_max".into(), number(z_end));
        rec.insert("ii_scaling_defect".into(), number(scaling));
        ok &= scaling <= 1e-10;
        if n >= 3 {
            let oracle = oracles::endpoint_s(n)?;
            let tail = geometry::height_tail(n, rho_max)?;
            let rel = ((g.endpoint_s - oracle) / oracle).abs();
            rec.insert("S_oracle".into(), number(oracle));
            rec.insert("S_oracle_rel_error".into(), number(rel));
            rec.insert("height_tail".into(), number(tail));
            ok &= rel <= 1e-10;
        }
        out.json(&format!("geometry_n{n}.json"), &rec)?;
        out.derive(&format!("S_n{n}"), g.endpoint_s);
        println!("n = {n}: S = {}  z({rho_max}) = {z_end}  |II|² scaling defect {scaling:.2e}", g.endpoint_s);
    }
    Ok(ok)
}
