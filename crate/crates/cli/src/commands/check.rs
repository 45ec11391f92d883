use clap::Args;

use catenoid_core::acceptance::{run_criterion, CRITERIA};

use crate::config::Config;
use crate::error::CliResult;
use crate::output::Outputs;

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Run a single criterion (1–10); all of them otherwise, in parallel.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=CRITERIA as i64))]
    pub criterion: Option<u8>,
}

pub fn run(args: &CheckArgs, cfg: &mut Config, out: &mut Outputs) -> CliResult<bool> {
    let ids: Vec<usize> = match args.criterion {
        Some(k) => vec![k as usize],
        None => (1..=CRITERIA).collect(),
    };
    cfg.record("criteria", ids.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","));
    let outcomes: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|&k| s.spawn(move || run_criterion(k))).collect();
        handles.into_iter().map(|h| h.join().expect("criteria catch their own panics")).collect()
    });
    for o in &outcomes {
        println!("{}", o.line());
    }
    let name = match args.criterion {
        Some(k) => format!("acceptance_{k}.json"),
        None => "acceptance.json".into(),
    };
    out.json(&name, &outcomes)?;
    Ok(outcomes.iter().all(|o| o.pass))
}
