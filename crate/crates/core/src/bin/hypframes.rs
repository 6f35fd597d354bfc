//! Experiment runner. Exit status: 0 pass, 1 fail, 2 usage or config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use hypframes::config::{ExperimentConfig, A0};
use hypframes::experiments::{run, run_all, Context};
use hypframes::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Plancherel,
    FrameBounds,
    Reconstruct,
    Besov,
    Decay,
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Plancherel => "plancherel",
            Command::FrameBounds => "frame-bounds",
            Command::Reconstruct => "reconstruct",
            Command::Besov => "besov",
            Command::Decay => "decay",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hypframes", about = "Paley-Wiener frame experiments on the hyperbolic plane")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// flat key = value file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// output directory for report.json and CSV tables
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    jmax: Option<usize>,
    /// number, or "calibrate"
    #[arg(long)]
    a0: Option<String>,
}

fn config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(d) = cli.delta {
        cfg.delta = d;
    }
    if let Some(j) = cli.jmax {
        cfg.j_max = j;
    }
    if let Some(a) = &cli.a0 {
        cfg.a0 = a.parse::<A0>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::Config(_) | Error::Domain(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hypframes: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = Context::new(&cfg).and_then(|mut ctx| match cli.command {
        Command::All => {
            let s = run_all(&mut ctx)?;
            s.write(&cfg.output_dir)?;
            for r in &s.reports {
                println!("{:<13} {}  ({:.1}s)", r.experiment, if r.pass { "PASS" } else { "FAIL" }, r.wall_clock_s);
            }
            Ok(s.pass)
        }
        c => {
            let r = run(c.name(), &mut ctx)?;
            r.write(&cfg.output_dir)?;
            for (k, v) in &r.verdicts {
                println!("{k:<28} {}", if *v { "PASS" } else { "FAIL" });
            }
            println!("{:<28} {}  ({:.1}s)", r.experiment, if r.pass { "PASS" } else { "FAIL" }, r.wall_clock_s);
            Ok(r.pass)
        }
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hypframes: {e}");
            exit_for(&e)
        }
    }
}
