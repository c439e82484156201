use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flexcap::pipeline::{self, DataSource, ResultDocument, RunConfig};
use flexcap::spectral::GapFill;

#[derive(Parser)]
#[command(name = "flexcap", version, about = "Spectral capacity of flexible-load ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Net-demand CSV (`timestamp_iso8601,net_demand_kw`); replaces the
    /// synthetic generator.
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    /// Gap policy for CSV input.
    #[arg(long, global = true, value_enum)]
    fill: Option<Fill>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Estimate and fit the net-demand spectrum.
    Estimate,
    /// Project the band-passed need spectrum onto the fleet's feasible set.
    Project,
    /// Projection plus Monte Carlo verification of the QoS guarantees.
    Verify,
    /// Capacity indices against fleet size for each sweep band.
    Sweep,
    /// All of the above.
    All,
}

#[derive(ValueEnum, Clone, Copy)]
enum Fill {
    None,
    Linear,
}

fn config(cli: &Cli) -> flexcap::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(data) = &cli.data {
        cfg.data.source = DataSource::Csv;
        cfg.data.path = Some(data.clone());
    }
    if let Some(fill) = cli.fill {
        cfg.data.fill = match fill {
            Fill::None => GapFill::None,
            Fill::Linear => GapFill::Linear,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> flexcap::Result<ResultDocument> {
    let cfg = config(cli)?;
    match cli.command {
        Command::Estimate => pipeline::cmd_estimate(&cfg),
        Command::Project => pipeline::cmd_project(&cfg),
        Command::Verify => pipeline::cmd_verify(&cfg),
        Command::Sweep => pipeline::cmd_sweep(&cfg),
        Command::All => pipeline::cmd_all(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(doc) => {
            log::info!(
                "wrote {} (hash {})",
                cli.out
                    .as_deref()
                    .map_or_else(|| "result.json".into(), |d| d.join("result.json").display().to_string()),
                doc.content_hash.as_deref().unwrap_or("-")
            );
            if let Some(ver) = &doc.verification {
                if ver.iter().any(|v| !v.report.pass) {
                    log::warn!("Monte Carlo check failed for at least one bin");
                }
            }
            if doc.all_converged() {
                ExitCode::SUCCESS
            } else {
                log::warn!("solver did not converge; results are flagged");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
