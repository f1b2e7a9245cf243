//! `jweyl`: spectral computations for Jacobi operators on finite windows.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure
//! (diagnostic JSON on stderr), 4 verification failure.

mod config;
mod output;
mod tasks;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use jacobi_weyl::verify::DEFAULT_SEED;
use jacobi_weyl::Error;

use config::{OperatorArgs, TaskConfig};
use output::{Json, Metadata};
use tasks::{
    BmArgs, Ctx, DbArgs, HlArgs, KreinArgs, MeasureArgs, Outcome, ReconstructArgs, SpectrumArgs, TransformArgs,
    VerifyArgs, WeylArgs,
};

#[derive(Debug, Parser)]
#[command(name = "jweyl", version, about)]
struct Cli {
    /// TOML task file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Leave the timestamp out of the metadata
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Write the artifact here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(flatten)]
    operator: OperatorArgs,
    /// Defaults to the `task` named in the task file
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues of the window operator
    Spectrum(SpectrumArgs),
    /// Spectral measure atoms, or interval masses by Stieltjes inversion
    Measure(MeasureArgs),
    /// M, m± or the Green function on a grid of z
    Weyl(WeylArgs),
    /// Spectral transform of a vector, or its inverse
    Transform(TransformArgs),
    /// Product representation of m₋ from two interlacing spectra
    Krein(KreinArgs),
    /// Coefficient table from a spectral measure
    Reconstruct(ReconstructArgs),
    /// Decay rate of M₁ − M₀ along rays
    BmCheck(BmArgs),
    /// Random perturbations of the right half against the χ/φ ratio
    HlProbe(HlArgs),
    /// de Branges space invariants, one row per check and site
    DbCheck(DbArgs),
    /// The full acceptance suite
    VerifyAll(VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Measure(_) => "measure",
            Command::Weyl(_) => "weyl",
            Command::Transform(_) => "transform",
            Command::Krein(_) => "krein",
            Command::Reconstruct(_) => "reconstruct",
            Command::BmCheck(_) => "bm-check",
            Command::HlProbe(_) => "hl-probe",
            Command::DbCheck(_) => "db-check",
            Command::VerifyAll(_) => "verify-all",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "spectrum" => Command::Spectrum(Default::default()),
            "measure" => Command::Measure(Default::default()),
            "weyl" => Command::Weyl(Default::default()),
            "transform" => Command::Transform(Default::default()),
            "krein" => Command::Krein(Default::default()),
            "reconstruct" => Command::Reconstruct(Default::default()),
            "bm-check" => Command::BmCheck(Default::default()),
            "hl-probe" => Command::HlProbe(Default::default()),
            "db-check" => Command::DbCheck(Default::default()),
            "verify-all" => Command::VerifyAll(Default::default()),
            _ => return None,
        })
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(Error),
}

impl From<Error> for Failure {
    /// Input-shaped errors are configuration errors; the rest are numerical.
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidWindow { .. }
            | Error::InvalidParameter(_)
            | Error::InvariantViolation { .. }
            | Error::Domain { .. }
            | Error::NotInterlaced(_)
            | Error::NotEnoughAtoms { .. }
            | Error::Format(_)
            | Error::Io(_) => Failure::Config(e.to_string()),
            other => Failure::Numerical(other),
        }
    }
}

fn kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string()
}

fn run(cli: Cli) -> Result<(Outcome, Metadata, Option<PathBuf>), (Failure, &'static str)> {
    let cfg = match &cli.config {
        Some(p) => TaskConfig::load(p).map_err(|f| (f, "config"))?,
        None => TaskConfig::default(),
    };
    let command = match cli.command {
        Some(c) => c,
        None => match cfg.task.as_deref() {
            Some(name) => Command::from_name(name)
                .ok_or_else(|| (Failure::Config(format!("unknown task {name:?}")), "config"))?,
            None => {
                return Err((
                    Failure::Config("no subcommand given and no task in the task file".into()),
                    "config",
                ))
            }
        },
    };
    let name = command.name();
    let mut meta = Metadata::default();
    meta.push("tool", Json::str("jweyl"));
    meta.push("version", Json::str(env!("CARGO_PKG_VERSION")));
    meta.push("command", Json::str(name));
    let mut ctx = Ctx {
        operator_args: &cli.operator,
        cfg: &cfg,
        seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        meta,
    };
    let result = match command {
        Command::Spectrum(a) => tasks::spectrum(&mut ctx, a.overlay(cfg.spectrum.clone())),
        Command::Measure(a) => tasks::measure(&mut ctx, a.overlay(cfg.measure.clone())),
        Command::Weyl(a) => tasks::weyl(&mut ctx, a.overlay(cfg.weyl.clone())),
        Command::Transform(a) => tasks::transform(&mut ctx, a.overlay(cfg.transform.clone())),
        Command::Krein(a) => tasks::krein(&mut ctx, a.overlay(cfg.krein.clone())),
        Command::Reconstruct(a) => tasks::reconstruct(&mut ctx, a.overlay(cfg.reconstruct.clone())),
        Command::BmCheck(a) => tasks::bm_check(&mut ctx, a.overlay(cfg.bm_check.clone())),
        Command::HlProbe(a) => tasks::hl_probe(&mut ctx, a.overlay(cfg.hl_probe.clone())),
        Command::DbCheck(a) => tasks::db_check(&mut ctx, a.overlay(cfg.db_check.clone())),
        Command::VerifyAll(a) => tasks::verify_all(&mut ctx, a.overlay(cfg.verify_all.clone())),
    };
    let outcome = result.map_err(|f| (f, name))?;
    let mut meta = ctx.meta;
    if !cli.no_timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        meta.push("timestamp", Json::Int(secs as i64));
    }
    Ok((outcome, meta, cli.output.or(cfg.output)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((outcome, meta, path)) => {
            let text = outcome.artifact.render(&meta);
            let written = match &path {
                Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("jweyl: {e}");
                return ExitCode::from(2);
            }
            match outcome.verification_failure {
                Some(msg) => {
                    eprintln!("jweyl: verification failed: {msg}");
                    ExitCode::from(4)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err((Failure::Config(msg), _)) => {
            eprintln!("jweyl: config error: {msg}");
            ExitCode::from(2)
        }
        Err((Failure::Numerical(e), command)) => {
            let diag = Json::obj([
                ("error", Json::str("numerical")),
                ("command", Json::str(command)),
                ("kind", Json::str(kind(&e))),
                ("message", Json::str(e.to_string())),
            ]);
            eprintln!("{}", diag.compact());
            ExitCode::from(3)
        }
    }
}
