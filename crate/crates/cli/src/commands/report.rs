use std::path::{Path, PathBuf};

use clap::Args;

use catenoid_core::DecayFit;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{fmt, Outputs};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// DecayFit JSON files, or directories searched (non-recursively) for `*decay_fit*.json`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

fn collect(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json") && f.file_name().is_some_and(|n| n.to_string_lossy().contains("decay_fit")))
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(CliError::Usage(format!("no such input {}", p.display())));
        }
    }
    Ok(files)
}

fn read_fit(path: &Path) -> CliResult<DecayFit> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

/// Aggregates DecayFit records into one table. Unreadable records fail the command.
pub fn run(args: &ReportArgs, cfg: &mut Config, out: &mut Outputs) -> CliResult<bool> {
    let files = collect(&args.inputs)?;
    cfg.record("inputs", files.len());
    if files.is_empty() {
        return Err(CliError::Usage("no DecayFit records found".into()));
    }
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut ok = true;
    for f in &files {
        match read_fit(f) {
            Ok(fit) => {
                rows.push(vec![
                    f.display().to_string(),
                    fmt(fit.window[0]),
                    fmt(fit.window[1]),
                    fmt(fit.exponent),
                    fmt(fit.prefactor),
                    fmt(fit.residual),
                    fit.samples.to_string(),
                    fmt(fit.decades()),
                ]);
                println!("{}: exponent {:.3} on [{}, {}]", f.display(), fit.exponent, fit.window[0], fit.window[1]);
                fits.push(fit);
            }
            Err(e) => {
                eprintln!("{}: {e}", f.display());
                ok = false;
            }
        }
    }
    out.csv("report.csv", &["source", "t0", "t1", "exponent", "prefactor", "residual", "samples", "decades"], rows)?;
    let exps: Vec<f64> = fits.iter().map(|f| f.exponent).collect();
    if !exps.is_empty() {
        let mean = exps.iter().sum::<f64>() / exps.len() as f64;
        out.json(
            "report.json",
            &serde_json::json!({
                "records": exps.len(),
                "exponent_mean": mean,
                "exponent_min": exps.iter().cloned().fold(f64::INFINITY, f64::min),
                "exponent_max": exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }),
        )?;
    }
    Ok(ok)
}
