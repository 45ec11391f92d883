//! Flat `key = value` configuration with flag overrides.
//!
//! Precedence, lowest first: built-in default, config file, `--set`, explicit
//! subcommand flag. Every value a command reads is recorded in resolved form so
//! the manifest echoes exactly what ran.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Recognized keys with a one-line description, for `--help` and validation.
pub const KEYS: &[(&str, &str)] = &[
    ("n", "catenoid dimension"),
    ("rho_max", "half-width of the ρ domain"),
    ("intervals", "grid intervals on [−ρ_max, ρ_max] (alias N)"),
    ("cfl", "Courant number relative to the neck spacing"),
    ("horizon", "final time"),
    ("radius", "foliation radius R; data live in |ρ| < R/2 (alias R)"),
    ("cutoff_radius", "test-function cutoff radius R₁ (alias R1)"),
    ("delta1", "smoothed-min band width δ₁"),
    ("beta", "modulation relaxation rate β"),
    ("epsilon", "data amplitude ε"),
    ("trap_factor", "trap amplitude in units of ε (C-threshold)"),
    ("bump_width", "width of the bump profile"),
    ("bump_center", "center of the bump profile"),
    ("bracket", "initial shooting bracket lo,hi"),
    ("tol", "bisection tolerance"),
    ("budget", "maximum number of candidate evolutions"),
    ("backend", "linear | nonlinear"),
    ("window", "decay-fit window lo,hi"),
    ("sup_radius", "interior radius for sup-norms"),
    ("sample_every", "diagnostic sampling interval"),
    ("alpha", "local-energy weight exponent α"),
    ("r_split", "interior/exterior split radius R̃"),
    ("seed", "random seed for sampled checks"),
];

fn canonical(key: &str) -> Option<&'static str> {
    let k = match key {
        "N" => "intervals",
        "R" => "radius",
        "R1" => "cutoff_radius",
        other => other,
    };
    KEYS.iter().find(|(name, _)| *name == k).map(|(name, _)| *name)
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    raw: BTreeMap<&'static str, String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Config::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let k = canonical(key).ok_or_else(|| CliError::Usage(format!("unknown config key '{key}'")))?;
        self.raw.insert(k, value.to_string());
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> CliResult<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    /// Explicit flag value, else config value, else `default`; the result is recorded.
    pub fn get<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        let k = canonical(key).ok_or_else(|| CliError::Usage(format!("unknown config key '{key}'")))?;
        let v = match flag {
            Some(v) => v,
            None => match self.raw.get(k) {
                Some(s) => s.parse().map_err(|_| CliError::Usage(format!("invalid value '{s}' for '{k}'")))?,
                None => default,
            },
        };
        self.resolved.insert(k.to_string(), v.to_string());
        Ok(v)
    }

    /// A `lo,hi` pair with lo < hi.
    pub fn pair(&mut self, key: &str, flag: Option<(f64, f64)>, default: (f64, f64)) -> CliResult<(f64, f64)> {
        let k = canonical(key).ok_or_else(|| CliError::Usage(format!("unknown config key '{key}'")))?;
        let v = match flag {
            Some(v) => v,
            None => match self.raw.get(k) {
                Some(s) => parse_pair(s).map_err(CliError::Usage)?,
                None => default,
            },
        };
        if !(v.0 < v.1) {
            return Err(CliError::Usage(format!("'{k}' must satisfy lo < hi, got {},{}", v.0, v.1)));
        }
        self.resolved.insert(k.to_string(), format!("{},{}", v.0, v.1));
        Ok(v)
    }

    /// Records a value the command fixed itself (e.g. a list of dimensions).
    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

/// Parses `lo,hi` (as used by `--bracket` and `--window`).
pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got '{s}'"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    Ok((lo, hi))
}
