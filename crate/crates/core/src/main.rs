use clap::Parser;
use dynamo_core::harness::{build_jobs, run, RunOptions, Target};
use dynamo_core::DynamoError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Driven spin-boson dynamo simulations.
#[derive(Parser, Debug)]
#[command(name = "dynamo-sim", version)]
struct Cli {
    /// Solver (ed, sse, niba, gkls, analytic) or preset (fig2a … fig12).
    target: String,
    /// TOML configuration; for presets it is merged into every run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Base seed for stochastic runs.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dynamo-sim: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli) -> Result<ExitCode, DynamoError> {
    let target = Target::parse(&cli.target)?;
    let user = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| DynamoError::Argument(format!("cannot read {}: {e}", path.display())))?;
            Some(text.parse().map_err(|e: toml::de::Error| DynamoError::Config {
                keys: vec![format!("<syntax: {}>", e.message().trim())],
            })?)
        }
        None => None,
    };
    if cli.workers == Some(0) {
        return Err(DynamoError::Config { keys: vec!["--workers".into()] });
    }
    let jobs = build_jobs(&target, user.as_ref(), cli.seed)?;
    let opts = RunOptions { out: cli.out.clone(), workers: cli.workers, seed: cli.seed };
    let manifest = run(&jobs, &opts)?;
    for r in &manifest.runs {
        if let dynamo_core::harness::manifest::RunStatus::Failed(msg) = &r.status {
            eprintln!("{} [{}] failed: {msg}", r.name, r.point);
        }
    }
    let failed = manifest.n_failed();
    println!("{} runs, {} failed, config {}", manifest.runs.len(), failed, &manifest.config_hash[..12]);
    Ok(if failed > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}
