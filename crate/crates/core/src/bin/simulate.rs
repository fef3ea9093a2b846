use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fdlink::harness::{load_config, run_scenario, Scenario};
use fdlink::Error;

/// Run one of the simulation scenarios and write its CSV outputs.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    /// tradeoff, optimality, fd-hd or fit
    scenario: Scenario,

    /// INI-style configuration file; missing keys take the built-in defaults
    #[arg(long)]
    config: PathBuf,

    /// Overrides `[harness] seed`
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides `[harness] output_dir`
    #[arg(long)]
    out: Option<PathBuf>,

    /// Sweep every fading-trace sample instead of the trace-mean gain
    #[arg(long)]
    per_sample: bool,
}

fn exit_code(err: &Error) -> u8 {
    if err.is_infeasibility() {
        3
    } else if matches!(err, Error::CheckFailed(_)) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> fdlink::Result<()> {
        let mut cfg = load_config(&cli.config)?;
        if let Some(seed) = cli.seed {
            cfg.set_seed(seed);
        }
        if let Some(out) = &cli.out {
            cfg.set_output_dir(out.clone());
        }
        if cli.per_sample {
            cfg.set_per_sample(true);
        }
        for line in cfg.banner() {
            eprintln!("# {line}");
        }
        let outcome = run_scenario(cli.scenario, &cfg)?;
        for line in &outcome.summary {
            println!("{line}");
        }
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
        Ok(())
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
