//! One function per subcommand; each returns the text to write.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use wavebound_core::bernoulli;
use wavebound_core::bounds::check_all;
use wavebound_core::counter_current::{
    family_minus, family_plus, halving_samples, verify_lemma1, verify_lemma2,
};
use wavebound_core::io::to_json;
use wavebound_core::stream::equispaced;
use wavebound_core::{ClassLabel, Error, FamilySide, StreamSolver, VorticityDistribution, WaveField};

use crate::config::RunConfig;

pub struct Output {
    pub text: String,
    /// Extra file (or stderr when `None`) for commands with two products.
    pub side_text: Option<String>,
    /// No hypothesis of the requested result holds.
    pub hypothesis_failed: bool,
}

impl Output {
    fn text(text: String) -> Self {
        Output { text, side_text: None, hypothesis_failed: false }
    }
}

pub fn load_solver(cfg: &RunConfig) -> Result<StreamSolver> {
    let path = RunConfig::require(&cfg.dist, "dist")?;
    let text = read(&path)?;
    let dist = VorticityDistribution::from_json(&text).with_context(|| format!("distribution {}", path.display()))?;
    Ok(StreamSolver::with_tolerances(dist, cfg.tolerances()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn classify(cfg: &RunConfig) -> Result<Output> {
    let solver = load_solver(cfg)?;
    Ok(Output::text(to_json(solver.class())?))
}

pub fn curve(cfg: &RunConfig, negative: bool) -> Result<Output> {
    let solver = load_solver(cfg)?;
    let s0 = solver.s0();
    let s_min = cfg.s_min.unwrap_or(s0 + 1e-2);
    let s_max = match cfg.s_max {
        Some(v) => v,
        None => (s0 + 5.0).max(2.0 * bernoulli::critical(&solver)?.s_c),
    };
    if !(s_max > s_min) {
        bail!("need s_max > s_min, got [{s_min}, {s_max}]");
    }
    let n = cfg.grid();
    let curve = bernoulli::bifurcation_curve(&solver, &equispaced(s_min, s_max, n), negative.then_some(n))?;
    let mut rows = Vec::new();
    if let Some(nb) = &curve.negative_branch {
        rows.extend(nb.samples.iter().copied());
    }
    rows.extend(curve.samples.iter().copied());
    Ok(Output {
        text: bernoulli::curve_csv(&rows)?,
        side_text: Some(to_json(&curve.constants)?),
        hypothesis_failed: false,
    })
}

pub fn stream(cfg: &RunConfig, cauchy: bool) -> Result<Output> {
    let solver = load_solver(cfg)?;
    let s = RunConfig::require(&cfg.s, "s")?;
    let y_min = cfg.y_min.unwrap_or(0.0);
    let y_max = match cfg.y_max {
        Some(v) => v,
        None => bernoulli::extended_depth(&solver, s).context("no depth at this s; pass --y-max")?,
    };
    if !(y_max > y_min) {
        bail!("need y_max > y_min, got [{y_min}, {y_max}]");
    }
    let profile = if cauchy {
        solver.profile_cauchy(s, (y_min, y_max), cfg.grid())?
    } else {
        solver.profile_implicit(s, &equispaced(y_min, y_max, cfg.grid()))?
    };
    Ok(Output::text(to_json(&profile)?))
}

pub fn family(cfg: &RunConfig) -> Result<Output> {
    let solver = load_solver(cfg)?;
    let s = RunConfig::require(&cfg.s, "s")?;
    let sol = match RunConfig::require(&cfg.side, "side")? {
        FamilySide::Minus => family_minus(&solver, s, cfg.grid())?,
        FamilySide::Plus => family_plus(&solver, s, cfg.grid())?,
    };
    Ok(Output::text(to_json(&sol)?))
}

pub fn conjugate(cfg: &RunConfig) -> Result<Output> {
    let solver = load_solver(cfg)?;
    let r = RunConfig::require(&cfg.r, "r")?;
    Ok(Output::text(to_json(&bernoulli::conjugate_streams(&solver, r)?)?))
}

#[derive(Serialize)]
struct LemmaOutput<T: Serialize> {
    class: ClassLabel,
    lemma: u8,
    report: T,
}

pub fn lemmas(cfg: &RunConfig) -> Result<Output> {
    let solver = load_solver(cfg)?;
    let class = solver.label();
    let text = match class {
        ClassLabel::II => to_json(&LemmaOutput {
            class,
            lemma: 1,
            report: verify_lemma1(&solver, &halving_samples(0.1, 8))?,
        })?,
        ClassLabel::III => to_json(&LemmaOutput {
            class,
            lemma: 2,
            report: verify_lemma2(&solver, &halving_samples(1.28e-2, 8))?,
        })?,
        ClassLabel::I => {
            return Err(Error::Inapplicable("the lemmas concern class II and class III".into()).into())
        }
    };
    Ok(Output::text(text))
}

pub fn extend(cfg: &RunConfig) -> Result<Output> {
    let solver = load_solver(cfg)?;
    Ok(Output::text(to_json(&bernoulli::extend_negative(&solver, cfg.grid())?)?))
}

pub fn check(cfg: &RunConfig) -> Result<Output> {
    let solver = load_solver(cfg)?;
    let path = RunConfig::require(&cfg.field, "field")?;
    let field = WaveField::from_json(&read(&path)?).with_context(|| format!("field {}", path.display()))?;
    let report = check_all(&field, &solver)?;
    Ok(Output {
        text: to_json(&report)?,
        side_text: None,
        hypothesis_failed: !report.any_applicable(),
    })
}
