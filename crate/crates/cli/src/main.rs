use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lzladder_cli::{execute, parse_config, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "lzladder", version, about = "Bias sweeps, quenches and thermal matching on a two-leg Bose-Hubbard ladder")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (overrides the config and LZLADDER_THREADS).
    #[arg(long, global = true, env = "LZLADDER_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Skip jobs already completed in the output directory's manifest.
    #[arg(long, global = true)]
    resume: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Basis dimension and memory estimate.
    BasisInfo,
    /// One sweep at `sweep.alpha`.
    Sweep,
    /// Sweeps over `sweep.alpha_grid` or `sweep.reduced_time_grid`.
    Scan,
    /// One quench to `quench.delta_f`.
    Quench,
    /// Quenches over `quench.delta_f_grid`.
    QuenchScan,
    /// Closed forms against exact integration for one double well.
    Doublewell,
    /// Energy-matched canonical and ideal-gas values per final bias.
    Thermal,
    /// Writes matplotlib scripts next to the summaries in the output directory.
    Plot,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::BasisInfo => Command::BasisInfo,
            Cmd::Sweep => Command::Sweep,
            Cmd::Scan => Command::Scan,
            Cmd::Quench => Command::Quench,
            Cmd::QuenchScan => Command::QuenchScan,
            Cmd::Doublewell => Command::DoubleWell,
            Cmd::Thermal => Command::Thermal,
            Cmd::Plot => Command::Plot,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    if let Some(o) = &cli.out {
        config.out = o.clone();
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|c| execute(cli.command.into(), &c, cli.resume));
    match result {
        Ok(report) => {
            println!("{}", report.stdout);
            if report.failed > 0 {
                if let Some(m) = &report.manifest {
                    for j in m.jobs.iter().filter(|j| j.error.is_some()) {
                        eprintln!("job {} ({}) failed: {}", j.id, j.label, j.error.as_deref().unwrap_or(""));
                    }
                }
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
