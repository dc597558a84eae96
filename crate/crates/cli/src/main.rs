use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

mod commands;
mod config;
mod output;

use config::CommandName;
use output::{config_digest, Output};

#[derive(Parser)]
#[command(
    name = "companion-lab",
    version,
    about = "Numerical checks of companion conservation laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; 1 gives the sequential reference run.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(
        long,
        global = true,
        env = "COMPANION_LAB_OUT",
        default_value = "companion-lab-out"
    )]
    out: PathBuf,
    /// Log progress to stderr (-vv for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON experiment config.
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check D_U Q = B D_U G on sampled states of built-in systems.
    CheckCompanion(ConfigArg),
    /// Estimate Besov exponents from shifted differences.
    Besov(ConfigArg),
    /// Fit mollifier gradient and approximation rates.
    MollifierAudit(ConfigArg),
    /// Commutator bound audit and residual sweep.
    CommutatorSweep(ConfigArg),
    /// Weak residuals and jump conditions.
    Dissipation(ConfigArg),
    /// Residual decay table across regularity exponents, plus the shock row.
    OnsagerSuite(ConfigArg),
}

impl Command {
    fn parts(&self) -> (CommandName, &PathBuf) {
        match self {
            Command::CheckCompanion(a) => (CommandName::CheckCompanion, &a.config),
            Command::Besov(a) => (CommandName::Besov, &a.config),
            Command::MollifierAudit(a) => (CommandName::MollifierAudit, &a.config),
            Command::CommutatorSweep(a) => (CommandName::CommutatorSweep, &a.config),
            Command::Dissipation(a) => (CommandName::Dissipation, &a.config),
            Command::OnsagerSuite(a) => (CommandName::OnsagerSuite, &a.config),
        }
    }
}

/// `Ok(true)` when every quantitative check passed.
fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let (name, path) = cli.command.parts();
    let (cfg, raw) = config::load(path)?;
    if cfg.command != name {
        bail!(
            "config error at `command`: config is for `{}`, invoked as `{}`",
            cfg.command.as_str(),
            name.as_str()
        );
    }
    let stem = cfg
        .output_name
        .clone()
        .unwrap_or_else(|| name.as_str().to_string());
    if stem.is_empty() || stem.contains(['/', '\\']) {
        bail!("config error at `output_name`: must be a plain file stem");
    }
    let out = Output::new(&cli.out, &stem, name.as_str(), config_digest(&raw))?;
    let base_dir = path.parent().map(PathBuf::from).unwrap_or_default();
    info!("running {} from {}", name.as_str(), path.display());
    let checks = commands::run(&cfg, &base_dir, &out)?;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    println!("wrote {}", out.json_path().display());
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
