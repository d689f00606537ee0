use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kfm::experiments::{self, output, ExperimentConfig, ExperimentKind, RunRecord};
use kfm::Error;

/// Kernel-path flow matching experiments.
#[derive(Parser)]
#[command(name = "kfm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// KDE convergence rate in W1 (or the bias curve with `rate.bias_only`).
    Rate(Common),
    /// Projected W1 rate of KDE samples on the sine curve.
    RateManifold(Common),
    /// ODE samples of the exact empirical field against direct KDE samples.
    FlowVsKde(Common),
    /// W1-close but TV-far flows.
    TvExample(Common),
    /// Field bounds and continuity-equation residuals.
    BoundsCheck(Common),
    /// KDE and trained-network samples on the sine curve.
    Manifold(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file overlaid on the experiment's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot.
    #[arg(long)]
    plots: bool,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn effective_config(kind: ExperimentKind, c: &Common) -> kfm::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path, Some(kind))?,
        None => ExperimentConfig::preset(kind),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    cfg.plots |= c.plots;
    cfg.validate()?;
    Ok(cfg)
}

fn report(rec: &RunRecord) {
    for s in &rec.slopes {
        match s.fit {
            Some(f) => println!(
                "{}: slope {:.4} (target {:.4}, band [{:.2}, {:.2}]) {}",
                s.name,
                f.slope,
                s.target,
                s.band.0,
                s.band.1,
                if s.in_band() { "in band" } else { "OUT OF BAND" }
            ),
            None => println!("{}: not fitted", s.name),
        }
    }
    for (k, v) in &rec.summary {
        println!("{k} = {v}");
    }
    for f in &rec.flags {
        println!("flag: {f}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Rate(c) => (ExperimentKind::Rate, c),
        Command::RateManifold(c) => (ExperimentKind::RateManifold, c),
        Command::FlowVsKde(c) => (ExperimentKind::FlowVsKde, c),
        Command::TvExample(c) => (ExperimentKind::TvExample, c),
        Command::BoundsCheck(c) => (ExperimentKind::BoundsCheck, c),
        Command::Manifold(c) => (ExperimentKind::ManifoldRun, c),
    };
    let cfg = match effective_config(kind, common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if common.print_config {
        match cfg.to_toml() {
            Ok(text) => {
                print!("{text}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        }
    }
    let result = experiments::run(&cfg).and_then(|rec| {
        let written = output::write_record(&rec, &cfg.out, cfg.plots)?;
        Ok((rec, written))
    });
    match result {
        Ok((rec, written)) => {
            report(&rec);
            println!("wrote {}", written.csv.display());
            ExitCode::SUCCESS
        }
        Err(e) if e.is_numerical() => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(3)
        }
        Err(e @ (Error::Config(_) | Error::Input(_) | Error::Unsupported(_) | Error::Size { .. })) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
