use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wzm_cli::{run, CliError, ScenarioConfig, EXIT_CHECK, EXPERIMENTS};

#[derive(Parser)]
#[command(name = "wzm", version, about = "Run weak-measurement experiments from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        config: PathBuf,
        /// Replaces the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the scenario's `output`, else out/<experiment>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key=value` or `section.key=value`; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the available experiments and their output files.
    List,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            for e in &EXPERIMENTS {
                println!("{:<18} {}", e.name, e.description);
                for (file, columns) in e.outputs {
                    println!("{:<18}   {file}: {columns}", "");
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            out,
            overrides,
        } => match execute(&config, seed, out, &overrides) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("wzm: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}

fn execute(path: &Path, seed: Option<u64>, out: Option<PathBuf>, overrides: &[String]) -> Result<ExitCode, CliError> {
    let mut cfg = ScenarioConfig::load(path, overrides)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.experiment));
    let summary = run(&cfg, &dir)?;
    for c in &summary.checks {
        println!(
            "{} {}: {:.6e} (target {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.target
        );
    }
    println!("wrote {}", dir.join("summary.json").display());
    Ok(if summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK as u8)
    })
}
