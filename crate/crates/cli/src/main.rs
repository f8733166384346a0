use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use log::info;

use ltlplan::pipeline::{run, RunOptions};
use ltlplan::scenario::parse_scenario;

/// Plan a co-safe temporal logic task over an uncertain semantic map.
///
/// Exit status: 0 execute and verified, 2 stop immediately, 3 verification
/// failed, 1 bad input.
#[derive(Parser, Debug)]
#[command(name = "ltlplan", version)]
struct Args {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Write an SVG of the belief and trajectory here.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Monte Carlo samples for verification (0 skips it).
    #[arg(long)]
    verify: Option<u64>,
    /// Seed for map sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's confidence level.
    #[arg(long)]
    delta: Option<f64>,
    /// Override the scenario's stop penalty (`inf` allowed).
    #[arg(long)]
    kappa: Option<f64>,
    /// Write the task automaton here.
    #[arg(long)]
    dump_dfa: Option<PathBuf>,
    /// Cross-check the search against reverse Dijkstra.
    #[arg(long)]
    oracle: bool,
    /// Plan file destination; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verification worker threads.
    #[arg(long, default_value_t = 4)]
    threads: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Exit status 2 means "stop", so usage errors map to 1 like other bad input.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match try_main(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn try_main(args: Args) -> anyhow::Result<u8> {
    let text = fs::read_to_string(&args.scenario)
        .with_context(|| format!("cannot read {}", args.scenario.display()))?;
    let scenario = parse_scenario(&text).with_context(|| format!("in {}", args.scenario.display()))?;
    let opts = RunOptions {
        delta: args.delta,
        kappa: args.kappa,
        seed: args.seed,
        verify: args.verify,
        oracle: args.oracle,
        dump_dfa: args.dump_dfa.is_some(),
        plot: args.plot.is_some(),
        threads: args.threads,
    };
    let out = run(&scenario, &opts)?;
    for line in out.log.lines() {
        info!("{line}");
    }
    if let (Some(path), Some(dump)) = (&args.dump_dfa, &out.dfa_dump) {
        fs::write(path, dump).with_context(|| format!("cannot write {}", path.display()))?;
    }
    if let (Some(path), Some(svg)) = (&args.plot, &out.svg) {
        fs::write(path, svg).with_context(|| format!("cannot write {}", path.display()))?;
    }
    match &args.out {
        Some(path) => {
            fs::write(path, &out.plan_text).with_context(|| format!("cannot write {}", path.display()))?;
            eprint!("{}", out.log);
        }
        None => print!("{}", out.plan_text),
    }
    Ok(out.exit_code() as u8)
}
