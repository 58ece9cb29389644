mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::Failure;
use config::RunConfig;
use output::OutDir;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    /// Linear growth rates on a wave-vector raster.
    Spectrum,
    /// Kernel modes at the critical wave number.
    Modes,
    /// Loci of explicit shallow-water flows.
    Flows,
    /// 2D incompressible simulation.
    Simulate,
    /// Stable-growth check over random perturbations.
    Growth,
    /// Steady reduced profiles: branch continuation or amplitude curves.
    Bifurcate,
    /// Residuals of the explicit-flow catalog.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Modes => "modes",
            Command::Flows => "flows",
            Command::Simulate => "simulate",
            Command::Growth => "growth",
            Command::Bifurcate => "bifurcate",
            Command::Verify => "verify",
        }
    }
}

fn after_help() -> String {
    format!(
        "Presets: {}\n\nOutput columns:\n{}\n{}\n{}\n{}\n{}\n{}\n{}\n\nEvery run also writes config.resolved and manifest.sha256.\n\
         Exit codes: 0 success, 1 numerical failure, 2 configuration error.\n\
         BSLAB_THREADS caps the worker threads.\n\n{}",
        config::PRESETS.join(", "),
        commands::SPECTRUM_COLUMNS,
        commands::MODES_COLUMNS,
        commands::FLOWS_COLUMNS,
        commands::SIMULATE_COLUMNS,
        commands::GROWTH_COLUMNS,
        commands::BIFURCATE_COLUMNS,
        commands::VERIFY_COLUMNS,
        config::schema_help()
    )
}

#[derive(Parser, Debug)]
#[command(name = "bslab", version, about = "Backscatter laboratory: spectra, explicit flows, simulation and bifurcations")]
struct Cli {
    command: Command,
    /// JSON config file; may name a preset under "preset".
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name; file values and --set override it.
    #[arg(long)]
    preset: Option<String>,
    /// Override one key, e.g. --set C=0.08.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("BSLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("BSLAB_THREADS: expected a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| format!("BSLAB_THREADS: {e}"))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads().map_err(Failure::Config)?;
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("config: cannot read {}: {e}", p.display())))?),
        None => None,
    };
    let cfg = RunConfig::resolve(text.as_deref(), cli.preset.as_deref(), &cli.set).map_err(Failure::Config)?;
    let mut out = OutDir::create(cli.out.clone()).map_err(|e| Failure::Config(format!("out: cannot create {}: {e}", cli.out.display())))?;
    out.json("config.resolved", &cfg.to_json(cli.command.name()))?;
    let result = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &mut out),
        Command::Modes => commands::modes(&cfg, &mut out),
        Command::Flows => commands::flows(&cfg, &mut out),
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Growth => commands::growth(&cfg, &mut out),
        Command::Bifurcate => commands::bifurcate(&cfg, &mut out),
        Command::Verify => commands::verify(&cfg, &mut out),
    };
    // the manifest covers whatever was written, failed runs included
    out.finish()?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse_from_help(after_help());
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(m)) => {
            eprintln!("bslab: numerical failure: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("bslab: configuration error: {m}");
            ExitCode::from(2)
        }
    }
}

trait ParseWithHelp: Sized {
    fn parse_from_help(after: String) -> Self;
}

impl ParseWithHelp for Cli {
    fn parse_from_help(after: String) -> Self {
        use clap::{CommandFactory, FromArgMatches};
        let cmd = Cli::command().after_long_help(after);
        let matches = cmd.get_matches();
        Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit())
    }
}
