#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use wavebound_core::FamilySide;

mod commands;
mod config;

use commands::Output;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "wavebound", version, about = "Stream solutions, Bernoulli curves and bounds for water waves with vorticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file with default values for the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Vorticity distribution (JSON)
    #[arg(long, global = true)]
    dist: Option<PathBuf>,
    /// Output file; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long = "tol-quad", global = true)]
    tol_quad: Option<f64>,
    #[arg(long = "tol-root", global = true)]
    tol_root: Option<f64>,
    #[arg(long = "tol-ode", global = true)]
    tol_ode: Option<f64>,
    /// Number of grid points (at least 8)
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Worker threads
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Minus,
    Plus,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Implicit,
    Cauchy,
}

#[derive(Subcommand)]
enum Command {
    /// Class of the distribution
    Classify,
    /// Bernoulli curve as CSV and the critical constants as JSON
    Curve {
        #[arg(long = "s-min")]
        s_min: Option<f64>,
        #[arg(long = "s-max")]
        s_max: Option<f64>,
        /// Also sample the negative branch (class II)
        #[arg(long)]
        negative: bool,
        /// File for the constants; next to --out (or stderr) by default
        #[arg(long)]
        constants: Option<PathBuf>,
    },
    /// Stream profile U(y; s)
    Stream {
        #[arg(long)]
        s: Option<f64>,
        #[arg(long = "y-min")]
        y_min: Option<f64>,
        #[arg(long = "y-max")]
        y_max: Option<f64>,
        #[arg(long, value_enum, default_value = "implicit")]
        method: Method,
    },
    /// Counter-current family member
    Family {
        #[arg(long)]
        side: Option<Side>,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Conjugate stream solutions for a Bernoulli constant
    Conjugate {
        #[arg(long)]
        r: Option<f64>,
    },
    /// Asymptotics of the counter-current depths
    Lemmas,
    /// Negative branch of the Bernoulli curve with s' and r'
    Extend,
    /// Check the bounds on a sampled wave field
    Check {
        #[arg(long)]
        field: Option<PathBuf>,
    },
}

impl Cli {
    fn flags(&self) -> RunConfig {
        let mut c = RunConfig {
            dist: self.dist.clone(),
            out: self.out.clone(),
            tol_quad: self.tol_quad,
            tol_root: self.tol_root,
            tol_ode: self.tol_ode,
            grid: self.grid,
            parallel: self.parallel,
            ..RunConfig::default()
        };
        match &self.command {
            Command::Curve { s_min, s_max, constants, .. } => {
                c.s_min = *s_min;
                c.s_max = *s_max;
                c.constants = constants.clone();
            }
            Command::Stream { s, y_min, y_max, .. } => {
                c.s = *s;
                c.y_min = *y_min;
                c.y_max = *y_max;
            }
            Command::Family { side, s } => {
                c.s = *s;
                c.side = side.map(|v| match v {
                    Side::Minus => FamilySide::Minus,
                    Side::Plus => FamilySide::Plus,
                });
            }
            Command::Conjugate { r } => c.r = *r,
            Command::Check { field } => c.field = field.clone(),
            Command::Classify | Command::Lemmas | Command::Extend => {}
        }
        c
    }
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Output> {
    match &cli.command {
        Command::Classify => commands::classify(cfg),
        Command::Curve { negative, .. } => commands::curve(cfg, *negative),
        Command::Stream { method, .. } => commands::stream(cfg, matches!(method, Method::Cauchy)),
        Command::Family { .. } => commands::family(cfg),
        Command::Conjugate { .. } => commands::conjugate(cfg),
        Command::Lemmas => commands::lemmas(cfg),
        Command::Extend => commands::extend(cfg),
        Command::Check { .. } => commands::check(cfg),
    }
}

fn write_to(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn emit(cfg: &RunConfig, out: &Output) -> Result<()> {
    write_to(cfg.out.as_deref(), &out.text)?;
    if let Some(side) = &out.side_text {
        let path = cfg.constants.clone().or_else(|| cfg.out.as_ref().map(|p| p.with_extension("json")));
        match path {
            Some(p) => write_to(Some(&p), side)?,
            None => eprint!("{side}"),
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Output> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cfg = file.merged(&cli.flags());
    cfg.validate()?;
    let out = match cfg.parallel {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run(cli, &cfg))?,
        None => run(cli, &cfg)?,
    };
    emit(&cfg, &out)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) if out.hypothesis_failed => {
            eprintln!("no theorem applies to this field");
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let hypothesis = err
                .chain()
                .filter_map(|e| e.downcast_ref::<wavebound_core::Error>())
                .any(|e| e.is_hypothesis_failure());
            ExitCode::from(if hypothesis { 2 } else { 1 })
        }
    }
}
