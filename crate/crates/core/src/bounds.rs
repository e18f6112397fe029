//! Candidate wave fields and the inequality checks they are judged by.
//!
//! A field lives on a boundary-fitted grid: `psi[i][j]` is the stream
//! function at `(x[i], sigma[j] * eta[i])`, so the bottom and the free
//! surface are grid lines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernoulli::{self, sigma_cap, SIGMA_CAP};
use crate::counter_current::{covering, h_minus, h_plus};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::roots;
use crate::stream::{equispaced, CauchySolution, StreamSolver};
use crate::vorticity::{ClassLabel, Direction, Side};

/// Boundary conditions on `psi` must hold to this accuracy.
pub const BC_TOL: f64 = 1e-8;
/// Slack for non-strict comparisons and hypothesis tests.
pub const EVAL_TOL: f64 = 1e-9;
/// A grid value within this distance of an extremum attains it.
pub const ATTAIN_TOL: f64 = 1e-10;
/// Points of the geometric parameter grid in theorems 3 and 4.
pub const SEARCH_POINTS: usize = 64;
/// Ratio between the ends of that grid.
const SEARCH_SPAN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveField {
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
    pub sigma: Vec<f64>,
    /// One row per `x`, one value per `sigma`.
    pub psi: Vec<Vec<f64>>,
    pub r: f64,
    /// Set for fields that are stream solutions themselves.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stream: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceExtrema {
    pub eta_check: f64,
    pub eta_hat: f64,
    pub x_check: f64,
    pub x_hat: f64,
    /// The extremum is met at a node away from the ends of the window.
    pub attained_check: bool,
    pub attained_hat: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inapplicable,
    /// A search found no qualifying parameter at this resolution.
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubCheck {
    pub label: String,
    pub margin: Extended,
    pub strict: bool,
    pub holds: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremEntry {
    /// 1 to 4; the proposition on the negative branch is reported as 5.
    pub theorem: u8,
    pub applicable: bool,
    pub verdict: Verdict,
    pub margin: Option<Extended>,
    pub witness: Option<Witness>,
    /// `s_check`, `s_hat`, or the qualifying `s` of a search.
    pub parameter: Option<f64>,
    /// `-y_-(s)` for theorem 3, `y_+(s)` for theorem 4.
    pub counter_current_at: Option<f64>,
    pub checks: Vec<SubCheck>,
    pub hypothesis_log: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTag {
    NearBottom,
    NearSurface,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterCurrentRegion {
    pub tag: RegionTag,
    pub cells: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    #[serde(flatten)]
    pub extrema: SurfaceExtrema,
    pub stream: bool,
    pub class: ClassLabel,
    pub theorems: Vec<TheoremEntry>,
    pub counter_current: Vec<CounterCurrentRegion>,
}

impl BoundsReport {
    pub fn any_applicable(&self) -> bool {
        self.theorems.iter().any(|t| t.applicable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// `U(y; s)` with depth `h(s)`.
    Stream,
    /// `u_-(y; s)` with depth `h_-(s)`.
    Minus,
    /// `u_+(y; s)` with depth `h_+(s)`.
    Plus,
}

impl WaveField {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: WaveField = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidField(m));
        if self.x.is_empty() {
            return bad("x: empty grid".into());
        }
        if self.x.windows(2).any(|w| !(w[0] < w[1])) || self.x.iter().any(|v| !v.is_finite()) {
            return bad("x: not strictly increasing".into());
        }
        if self.eta.len() != self.x.len() {
            return bad(format!("eta: {} values for {} x nodes", self.eta.len(), self.x.len()));
        }
        if let Some(i) = self.eta.iter().position(|&e| !(e > 0.0 && e.is_finite())) {
            return bad(format!("eta: value {} at index {i} is not positive", self.eta[i]));
        }
        let n = self.sigma.len();
        if n < 3
            || self.sigma[0] != 0.0
            || self.sigma[n - 1] != 1.0
            || self.sigma.windows(2).any(|w| !(w[0] < w[1]))
        {
            return bad("sigma: need an increasing grid from 0 to 1 with at least 3 nodes".into());
        }
        if self.psi.len() != self.x.len() {
            return bad(format!("psi: {} rows for {} x nodes", self.psi.len(), self.x.len()));
        }
        for (i, row) in self.psi.iter().enumerate() {
            if row.len() != n {
                return bad(format!("psi: row {i} has {} values, sigma has {n}", row.len()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return bad(format!("psi: row {i} is not finite"));
            }
            if row[0].abs() > BC_TOL || (row[n - 1] - 1.0).abs() > BC_TOL {
                return bad(format!("psi: boundary values violated in row {i}"));
            }
        }
        if !self.r.is_finite() {
            return bad("r: not finite".into());
        }
        Ok(())
    }

    pub fn y(&self, i: usize, j: usize) -> f64 {
        self.sigma[j] * self.eta[i]
    }

    pub fn surface_extrema(&self) -> SurfaceExtrema {
        let (mut ic, mut ih) = (0, 0);
        for (i, &e) in self.eta.iter().enumerate() {
            if e < self.eta[ic] {
                ic = i;
            }
            if e > self.eta[ih] {
                ih = i;
            }
        }
        let n = self.eta.len();
        let attained = |v: f64| {
            n > 2 && self.eta[1..n - 1].iter().any(|&e| (e - v).abs() <= ATTAIN_TOL)
        };
        SurfaceExtrema {
            eta_check: self.eta[ic],
            eta_hat: self.eta[ih],
            x_check: self.x[ic],
            x_hat: self.x[ih],
            attained_check: attained(self.eta[ic]),
            attained_hat: attained(self.eta[ih]),
        }
    }

    /// Flagged, or constant in `x`.
    pub fn is_stream(&self) -> bool {
        self.stream
            || (self.eta.iter().all(|&e| e == self.eta[0])
                && self.psi.iter().all(|row| row == &self.psi[0]))
    }

    pub fn max_psi(&self) -> f64 {
        self.psi.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_psi(&self) -> f64 {
        self.psi.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// `psi - delta` everywhere (boundary values included).
    pub fn lowered(&self, delta: f64) -> Self {
        let mut f = self.clone();
        f.psi.iter_mut().flatten().for_each(|v| *v -= delta);
        f
    }
}

impl TheoremEntry {
    fn new(theorem: u8) -> Self {
        TheoremEntry {
            theorem,
            applicable: true,
            verdict: Verdict::Holds,
            margin: None,
            witness: None,
            parameter: None,
            counter_current_at: None,
            checks: Vec::new(),
            hypothesis_log: Vec::new(),
        }
    }

    fn log(&mut self, m: impl Into<String>) {
        self.hypothesis_log.push(m.into());
    }

    fn inapplicable(mut self, m: impl Into<String>) -> Self {
        self.log(m);
        self.applicable = false;
        self.verdict = Verdict::Inapplicable;
        self.margin = None;
        self.witness = None;
        self
    }

    fn finish(mut self) -> Self {
        let worst = self
            .checks
            .iter()
            .min_by(|a, b| a.margin.to_f64().total_cmp(&b.margin.to_f64()));
        if let Some(w) = worst {
            self.margin = Some(w.margin);
            self.witness = w.witness;
        }
        self.verdict = if self.checks.iter().all(|c| c.holds) {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        self
    }
}

fn judge(margin: f64, strict: bool) -> bool {
    if strict {
        margin > 0.0
    } else {
        margin >= -EVAL_TOL
    }
}

fn scalar(label: &str, margin: f64, strict: bool, witness: Option<Witness>) -> SubCheck {
    SubCheck {
        label: label.into(),
        margin: Extended::from_f64(margin),
        strict,
        holds: judge(margin, strict),
        witness,
    }
}

/// Pointwise `diff >= 0` over the nodes selected by `include`. Each
/// node's value is reduced by an eighth of the largest second difference
/// around it.
fn pointwise<I, D>(field: &WaveField, label: &str, strict: bool, include: I, diff: D) -> Result<SubCheck>
where
    I: Fn(usize, f64) -> bool,
    D: Fn(usize, usize, f64) -> Result<f64>,
{
    let (nx, ns) = (field.x.len(), field.sigma.len());
    let mut d = vec![vec![None; ns]; nx];
    for i in 0..nx {
        for j in 0..ns {
            let y = field.y(i, j);
            if include(i, y) {
                d[i][j] = Some(diff(i, j, y)?);
            }
        }
    }
    let mut best: Option<(f64, Witness)> = None;
    for i in 0..nx {
        for j in 0..ns {
            let Some(v) = d[i][j] else { continue };
            let mut g: f64 = 0.0;
            if j > 0 && j + 1 < ns {
                if let (Some(a), Some(b)) = (d[i][j - 1], d[i][j + 1]) {
                    g = g.max((a - 2.0 * v + b).abs());
                }
            }
            if i > 0 && i + 1 < nx {
                if let (Some(a), Some(b)) = (d[i - 1][j], d[i + 1][j]) {
                    g = g.max((a - 2.0 * v + b).abs());
                }
            }
            let m = v - g / 8.0;
            if best.is_none_or(|(b, _)| m < b) {
                best = Some((m, Witness { x: field.x[i], y: field.y(i, j) }));
            }
        }
    }
    Ok(match best {
        Some((m, w)) => scalar(label, m, strict, Some(w)),
        None => SubCheck {
            label: label.into(),
            margin: Extended::PosInfinity,
            strict,
            holds: true,
            witness: None,
        },
    })
}

/// `s > s0` with `h(s) = target`, for `target < h0`.
pub fn solve_depth(solver: &StreamSolver, target: f64) -> Result<f64> {
    let s0 = solver.s0();
    let g = |s: f64| -> Result<f64> { Ok(solver.depth(s)? - target) };
    let mut hi = s0 + 1.0 + s0;
    let mut tries = 0;
    while g(hi)? > 0.0 {
        hi = s0 + 2.0 * (hi - s0);
        tries += 1;
        if tries > 200 {
            return Err(Error::NoBracket(format!("h(s) = {target}")));
        }
    }
    let lo = if solver.h0()?.is_finite() {
        s0
    } else {
        let mut lo = s0 + 0.5 * (hi - s0);
        tries = 0;
        while g(lo)? < 0.0 {
            lo = s0 + 0.5 * (lo - s0);
            tries += 1;
            if tries > 400 {
                return Err(Error::NoBracket(format!("h(s) = {target}")));
            }
        }
        lo
    };
    roots::brent(g, lo, hi, 1e-15)
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= EVAL_TOL * b.abs().max(1.0)
}

fn omega_1(solver: &StreamSolver) -> f64 {
    solver.class().primitive_1
}

/// (A), (B), (C) of theorem 1.
fn conjugate_checks(
    solver: &StreamSolver,
    field: &WaveField,
    ext: &SurfaceExtrema,
    strict: bool,
    entry: &mut TheoremEntry,
) -> Result<()> {
    let stream = field.is_stream();
    let crit = bernoulli::critical(solver)?;
    let r = field.r;
    entry.checks.push(scalar("(A) r >= r_c", r - crit.r_c, strict, None));
    let tie = 1e-12 * crit.r_c.abs().max(1.0);
    if r < crit.r_c - tie {
        entry.log("r < r_c: conjugate depths undefined, (B) and (C) skipped");
        return Ok(());
    }
    let pair = bernoulli::conjugate_streams(solver, r)?;
    let w_check = Some(Witness { x: ext.x_check, y: ext.eta_check });
    if r > crit.r_c + tie {
        entry.checks.push(scalar("(B) H_- < eta", ext.eta_check - pair.h_minus, !stream, w_check));
    } else {
        entry.log("r = r_c: (B) not required");
    }
    if let Some(h_plus) = subcritical_depth(solver, r, pair.h_plus)? {
        entry.checks.push(scalar("(C) eta_check <= H_+", h_plus - ext.eta_check, strict, w_check));
    } else {
        entry.log("r > r0: (C) not required");
    }
    Ok(())
}

/// `H_+` when `r <= r0`.
fn subcritical_depth(solver: &StreamSolver, r: f64, h_plus: Option<f64>) -> Result<Option<f64>> {
    if let Some(h) = h_plus {
        return Ok(Some(h));
    }
    match (bernoulli::r0(solver)?, solver.h0()?) {
        (Extended::Finite(r0), Extended::Finite(h0)) if near(r, r0) => Ok(Some(h0)),
        _ => Ok(None),
    }
}

pub fn check_theorem1(field: &WaveField, solver: &StreamSolver) -> Result<TheoremEntry> {
    let mut e = TheoremEntry::new(1);
    let ext = field.surface_extrema();
    let stream = field.is_stream();
    let top = field.max_psi();
    if top > 1.0 + EVAL_TOL {
        return Ok(e.inapplicable(format!("psi <= 1 fails: max psi = {top}")));
    }
    e.log("psi <= 1 holds");
    let eta = ext.eta_check;
    let h0 = solver.h0()?;
    let at_h0 = h0.finite().is_some_and(|v| near(eta, v));
    if !at_h0 && !h0.gt(eta) {
        return Ok(e.inapplicable(format!("eta_check = {eta} exceeds h0 = {h0}; see theorem 3")));
    }
    if at_h0 {
        e.log("eta_check = h0: relations (A)-(C) only");
    } else {
        e.log(format!("eta_check = {eta} < h0 = {h0}"));
        let s_check = solve_depth(solver, eta)?;
        e.parameter = Some(s_check);
        let sol = covering(solver, Side::Above)?.cauchy(s_check, 0.0, eta)?;
        let cut = eta * (1.0 - 1e-12);
        e.checks.push(pointwise(
            field,
            "psi < U_check on the strip",
            !stream,
            |_, y| y > 0.0 && y < cut,
            |i, j, y| Ok(sol.eval(y)?.0 - field.psi[i][j]),
        )?);
    }
    let strict = ext.attained_check && !stream && !at_h0;
    conjugate_checks(solver, field, &ext, strict, &mut e)?;
    Ok(e.finish())
}

pub fn check_theorem2(field: &WaveField, solver: &StreamSolver) -> Result<TheoremEntry> {
    let mut e = TheoremEntry::new(2);
    let ext = field.surface_extrema();
    let stream = field.is_stream();
    let bottom = field.min_psi();
    if bottom < -EVAL_TOL {
        return Ok(e.inapplicable(format!("psi >= 0 fails: min psi = {bottom}")));
    }
    e.log("psi >= 0 holds");
    let eta = ext.eta_hat;
    let h0 = solver.h0()?;
    let at_h0 = h0.finite().is_some_and(|v| near(eta, v));
    if !at_h0 && !h0.gt(eta) {
        return Ok(e.inapplicable(format!("eta_hat = {eta} exceeds h0 = {h0}")));
    }
    if at_h0 {
        e.log("eta_hat = h0: eta_hat >= H_+ only");
    } else {
        e.log(format!("eta_hat = {eta} < h0 = {h0}"));
        let s_hat = solve_depth(solver, eta)?;
        e.parameter = Some(s_hat);
        let sol = covering(solver, Side::Below)?.cauchy(s_hat, 0.0, eta)?;
        e.checks.push(pointwise(
            field,
            "psi > U_hat in D",
            !stream,
            |i, y| y > 0.0 && y < field.eta[i] * (1.0 - 1e-12),
            |i, j, y| Ok(field.psi[i][j] - sol.eval(y)?.0),
        )?);
    }
    let crit = bernoulli::critical(solver)?;
    if field.r < crit.r_c - 1e-12 * crit.r_c.abs().max(1.0) {
        e.log("r < r_c: H_+ undefined, eta_hat >= H_+ skipped");
    } else {
        let pair = bernoulli::conjugate_streams(solver, field.r)?;
        match subcritical_depth(solver, field.r, pair.h_plus)? {
            Some(h_plus) => {
                let strict = ext.attained_hat && !stream && !at_h0;
                let w = Some(Witness { x: ext.x_hat, y: eta });
                e.checks.push(scalar("eta_hat >= H_+", eta - h_plus, strict, w));
            }
            None => e.log("r > r0: eta_hat >= H_+ not required"),
        }
    }
    Ok(e.finish())
}

struct Candidate {
    s: f64,
    check: SubCheck,
    location: f64,
}

/// Evaluates a parameter grid, refines once between neighbours whose
/// status differs, and returns the smallest qualifying parameter.
fn search<F>(grid: Vec<f64>, eval: F, e: &mut TheoremEntry) -> Result<Option<Candidate>>
where
    F: Fn(f64) -> Result<Option<Candidate>> + Sync,
{
    let run = |pts: &[f64]| -> Vec<(f64, Option<Candidate>, Option<String>)> {
        pts.par_iter()
            .map(|&s| match eval(s) {
                Ok(c) => (s, c, None),
                Err(err) => (s, None, Some(format!("s = {s}: {err}"))),
            })
            .collect()
    };
    let mut results = run(&grid);
    let ok = |c: &Option<Candidate>| c.as_ref().is_some_and(|c| c.check.holds);
    let mids: Vec<f64> = results
        .windows(2)
        .filter(|w| ok(&w[0].1) != ok(&w[1].1))
        .map(|w| (w[0].0 * w[1].0).sqrt())
        .collect();
    results.extend(run(&mids));
    let failed: Vec<&String> = results.iter().filter_map(|r| r.2.as_ref()).collect();
    if let Some(first) = failed.first() {
        e.log(format!("{} grid points could not be evaluated, first {first}", failed.len()));
    }
    let tried = results.iter().filter(|r| r.1.is_some()).count();
    e.log(format!("{} parameters searched, {tried} inside the depth window", results.len()));
    Ok(results
        .into_iter()
        .filter_map(|r| r.1)
        .filter(|c| c.check.holds)
        .min_by(|a, b| a.s.total_cmp(&b.s)))
}

fn geometric(top: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| top * SEARCH_SPAN.powf(k as f64 / (n - 1) as f64))
        .collect()
}

fn settle(mut e: TheoremEntry, found: Option<Candidate>) -> TheoremEntry {
    match found {
        Some(c) => {
            e.parameter = Some(c.s);
            e.counter_current_at = Some(c.location);
            e.checks.push(c.check);
            e.finish()
        }
        None => {
            e.log("no qualifying s found at this resolution");
            e.verdict = Verdict::Unverified;
            e
        }
    }
}

pub fn check_theorem3(field: &WaveField, solver: &StreamSolver) -> Result<TheoremEntry> {
    let e = TheoremEntry::new(3);
    if solver.label() != ClassLabel::II {
        return Ok(e.inapplicable(format!("class {} is not class II", solver.label())));
    }
    check_theorem3_inner(e, field, solver)
}

fn check_theorem3_inner(mut e: TheoremEntry, field: &WaveField, solver: &StreamSolver) -> Result<TheoremEntry> {
    let top = field.max_psi();
    if top > 1.0 + EVAL_TOL {
        return Ok(e.inapplicable(format!("psi <= 1 fails: max psi = {top}")));
    }
    let eta = field.surface_extrema().eta_check;
    let h0 = solver.h0()?.to_f64();
    if !(eta > h0 && !near(eta, h0)) {
        return Ok(e.inapplicable(format!("h0 = {h0} < eta_check = {eta} fails; see theorem 1")));
    }
    e.log(format!("psi <= 1 and h0 = {h0} < eta_check = {eta}"));
    let cover = covering(solver, Side::Below)?;
    let (cap, _) = sigma_cap(&cover)?;
    let strict = !field.is_stream();
    let eval = |s: f64| -> Result<Option<Candidate>> {
        let hm = h_minus(solver, s)?;
        if !(hm > h0 && hm < eta) {
            return Ok(None);
        }
        let (_, y) = cover.turning_point(s, Direction::Left)?;
        let ym = y.to_f64();
        let sol: CauchySolution = cover.cauchy(s, 2.0 * ym, hm + 2.0 * ym)?;
        let check = pointwise(
            field,
            "psi < u_-(s) below h_-(s)",
            strict,
            |_, y| y > 0.0 && y < hm,
            |i, j, y| Ok(sol.eval(y + 2.0 * ym)?.0 - field.psi[i][j]),
        )?;
        Ok(Some(Candidate { s, check, location: -ym }))
    };
    let found = search(geometric(cap, SEARCH_POINTS), eval, &mut e)?;
    Ok(settle(e, found))
}

pub fn check_theorem4(field: &WaveField, solver: &StreamSolver) -> Result<TheoremEntry> {
    let mut e = TheoremEntry::new(4);
    if solver.label() != ClassLabel::III {
        return Ok(e.inapplicable(format!("class {} is not class III", solver.label())));
    }
    if !(omega_1(solver) > 0.0) {
        return Ok(e.inapplicable("Omega(1) > 0 fails"));
    }
    let bottom = field.min_psi();
    if bottom < -EVAL_TOL {
        return Ok(e.inapplicable(format!("psi >= 0 fails: min psi = {bottom}")));
    }
    let ext = field.surface_extrema();
    let eta = ext.eta_check;
    let h0 = solver.h0()?.to_f64();
    if !(eta > h0 && !near(eta, h0)) {
        return Ok(e.inapplicable(format!("h0 = {h0} < eta_check = {eta} fails")));
    }
    e.log(format!("psi >= 0, Omega(1) > 0 and h0 = {h0} < eta_check = {eta}"));
    let s0 = solver.s0();
    let cover = covering(&covering(solver, Side::Above)?, Side::Below)?;
    let strict = !field.is_stream();
    let eval = |s: f64| -> Result<Option<Candidate>> {
        let hp = h_plus(solver, s)?;
        if !(hp > h0 && hp < eta) {
            return Ok(None);
        }
        let (_, y) = cover.turning_point(s, Direction::Right)?;
        let sol = cover.cauchy(s, 0.0, ext.eta_hat)?;
        let check = pointwise(
            field,
            "psi > u_+(s) in D",
            strict,
            |i, y| y > 0.0 && y < field.eta[i] * (1.0 - 1e-12),
            |i, j, y| Ok(field.psi[i][j] - sol.eval(y)?.0),
        )?;
        Ok(Some(Candidate { s, check, location: y.to_f64() }))
    };
    let grid = geometric(1.0 + s0, SEARCH_POINTS).into_iter().map(|d| s0 + d).collect();
    let found = search(grid, eval, &mut e)?;
    Ok(settle(e, found))
}

/// The bound `eta_check <= H_+` for class II with `r` in `(r_c, r')`,
/// where `H_+` may sit on the negative branch.
pub fn check_proposition1(field: &WaveField, solver: &StreamSolver) -> Result<TheoremEntry> {
    let mut e = TheoremEntry::new(5);
    if solver.label() != ClassLabel::II {
        return Ok(e.inapplicable(format!("class {} is not class II", solver.label())));
    }
    let top = field.max_psi();
    if top > 1.0 + EVAL_TOL {
        return Ok(e.inapplicable(format!("psi <= 1 fails: max psi = {top}")));
    }
    let r = field.r;
    let crit = bernoulli::critical(solver)?;
    if r <= crit.r_c + 1e-12 * crit.r_c.abs().max(1.0) {
        return Ok(e.inapplicable(format!("r = {r} is not above r_c = {}", crit.r_c)));
    }
    let sp = bernoulli::s_prime(solver)?;
    if !sp.r_prime.gt(r) {
        return Ok(e.inapplicable(format!("r = {r} is not below r' = {}", sp.r_prime)));
    }
    let h_sp = match sp.s_prime {
        Extended::Finite(v) if !sp.boundary => Extended::Finite(bernoulli::extended_depth(solver, v)?),
        _ => Extended::PosInfinity,
    };
    let ext = field.surface_extrema();
    if !h_sp.gt(ext.eta_check) {
        return Ok(e.inapplicable(format!("eta_check = {} is not below h(s') = {h_sp}", ext.eta_check)));
    }
    e.log(format!("psi <= 1, r_c < r = {r} < r' = {}, eta_check < h(s') = {h_sp}", sp.r_prime));
    let r0 = bernoulli::r0(solver)?.to_f64();
    let (s, h) = if near(r, r0) {
        (0.0, solver.h0()?.to_f64())
    } else if r < r0 {
        let pair = bernoulli::conjugate_streams(solver, r)?;
        (pair.s_plus.unwrap_or(0.0), pair.h_plus.unwrap_or(f64::NAN))
    } else {
        let cover = covering(solver, Side::Below)?;
        let sigma_max = match sp.s_prime {
            Extended::Finite(v) if !sp.boundary => -v,
            _ => sigma_cap(&cover)?.0.min(SIGMA_CAP),
        };
        let f = |sigma: f64| -> Result<f64> { Ok(bernoulli::bernoulli_r(solver, -sigma)? - r) };
        let mut prev = 0.0;
        let mut root = None;
        for k in 1..=SEARCH_POINTS {
            let sigma = sigma_max * k as f64 / SEARCH_POINTS as f64;
            if f(sigma)? >= 0.0 {
                root = Some(roots::brent(f, prev, sigma, 1e-14)?);
                break;
            }
            prev = sigma;
        }
        let Some(sigma) = root else {
            e.log(format!("R(s) = r not bracketed on (-{sigma_max}, 0)"));
            e.verdict = Verdict::Unverified;
            return Ok(e);
        };
        (-sigma, bernoulli::extended_depth(solver, -sigma)?)
    };
    e.parameter = Some(s);
    let strict = ext.attained_check && !field.is_stream();
    let w = Some(Witness { x: ext.x_check, y: ext.eta_check });
    e.checks.push(scalar("eta_check <= H_+", h - ext.eta_check, strict, w));
    Ok(e.finish())
}

fn guarded(theorem: u8, r: Result<TheoremEntry>) -> Result<TheoremEntry> {
    match r {
        Err(err) if err.is_hypothesis_failure() => Ok(TheoremEntry::new(theorem).inapplicable(err.to_string())),
        other => other,
    }
}

/// Validates the field and runs every check in a fixed order.
pub fn check_all(field: &WaveField, solver: &StreamSolver) -> Result<BoundsReport> {
    field.validate()?;
    let checks: [fn(&WaveField, &StreamSolver) -> Result<TheoremEntry>; 5] = [
        check_theorem1,
        check_theorem2,
        check_theorem3,
        check_theorem4,
        check_proposition1,
    ];
    let theorems = checks
        .par_iter()
        .enumerate()
        .map(|(k, f)| guarded(k as u8 + 1, f(field, solver)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsReport {
        extrema: field.surface_extrema(),
        stream: field.is_stream(),
        class: solver.label(),
        theorems,
        counter_current: detect_counter_current(field),
    })
}

/// `psi_y` at every node from (non-uniform) differences in `sigma`.
fn psi_y(field: &WaveField) -> Vec<Vec<f64>> {
    let s = &field.sigma;
    let n = s.len();
    field
        .psi
        .iter()
        .zip(&field.eta)
        .map(|(row, &eta)| {
            (0..n)
                .map(|j| {
                    let d = if j == 0 {
                        (row[1] - row[0]) / (s[1] - s[0])
                    } else if j == n - 1 {
                        (row[j] - row[j - 1]) / (s[j] - s[j - 1])
                    } else {
                        let (h1, h2) = (s[j] - s[j - 1], s[j + 1] - s[j]);
                        (h1 * h1 * row[j + 1] - h2 * h2 * row[j - 1] - (h1 * h1 - h2 * h2) * row[j])
                            / (h1 * h2 * (h1 + h2))
                    };
                    d / eta
                })
                .collect()
        })
        .collect()
}

/// Connected (4-neighbour) sets of nodes with `psi_y < 0`.
pub fn detect_counter_current(field: &WaveField) -> Vec<CounterCurrentRegion> {
    let v = psi_y(field);
    let (nx, ns) = (field.x.len(), field.sigma.len());
    let mut seen = vec![vec![false; ns]; nx];
    let mut out = Vec::new();
    for i0 in 0..nx {
        for j0 in 0..ns {
            if seen[i0][j0] || !(v[i0][j0] < 0.0) {
                continue;
            }
            seen[i0][j0] = true;
            let mut stack = vec![(i0, j0)];
            let mut cells = 0;
            let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut sigma_sum = 0.0;
            while let Some((i, j)) = stack.pop() {
                cells += 1;
                let y = field.y(i, j);
                x_min = x_min.min(field.x[i]);
                x_max = x_max.max(field.x[i]);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
                sigma_sum += field.sigma[j];
                let mut push = |a: usize, b: usize| {
                    if !seen[a][b] && v[a][b] < 0.0 {
                        seen[a][b] = true;
                        stack.push((a, b));
                    }
                };
                if i > 0 {
                    push(i - 1, j);
                }
                if i + 1 < nx {
                    push(i + 1, j);
                }
                if j > 0 {
                    push(i, j - 1);
                }
                if j + 1 < ns {
                    push(i, j + 1);
                }
            }
            let tag = if sigma_sum / (cells as f64) < 0.5 {
                RegionTag::NearBottom
            } else {
                RegionTag::NearSurface
            };
            out.push(CounterCurrentRegion {
                tag,
                cells,
                x_min,
                x_max,
                y_min,
                y_max,
            });
        }
    }
    out
}

/// A constant-in-`x` field built from a stream profile on `[0, x_extent]`.
pub fn synth_stream_field(
    solver: &StreamSolver,
    kind: SynthKind,
    s: f64,
    x_extent: f64,
    nx: usize,
    nsigma: usize,
) -> Result<WaveField> {
    if nx < 1 || nsigma < 3 {
        return Err(Error::OutOfRange("need nx >= 1 and nsigma >= 3".into()));
    }
    let x = if nx == 1 { vec![0.0] } else { equispaced(0.0, x_extent, nx) };
    synth_stream_field_on(solver, kind, s, x, equispaced(0.0, 1.0, nsigma))
}

/// As [`synth_stream_field`] on given `x` and `sigma` grids.
pub fn synth_stream_field_on(
    solver: &StreamSolver,
    kind: SynthKind,
    s: f64,
    x: Vec<f64>,
    sigma: Vec<f64>,
) -> Result<WaveField> {
    let nsigma = sigma.len();
    if x.is_empty() || nsigma < 3 || sigma[0] != 0.0 || sigma[nsigma - 1] != 1.0 {
        return Err(Error::OutOfRange("need x nodes and a sigma grid from 0 to 1".into()));
    }
    let (depth, shift, sol) = match kind {
        SynthKind::Stream => {
            let d = bernoulli::extended_depth(solver, s)?;
            let cover = if s < 0.0 { covering(solver, Side::Below)? } else { solver.clone() };
            (d, 0.0, cover.cauchy(s, 0.0, d)?)
        }
        SynthKind::Minus => {
            let cover = covering(solver, Side::Below)?;
            let d = h_minus(solver, s)?;
            let (_, y) = cover.turning_point(s, Direction::Left)?;
            let shift = 2.0 * y.to_f64();
            (d, shift, cover.cauchy(s, shift, d + shift)?)
        }
        SynthKind::Plus => {
            let cover = covering(solver, Side::Above)?;
            let d = h_plus(solver, s)?;
            (d, 0.0, cover.cauchy(s, 0.0, d)?)
        }
    };
    let mut column = sigma
        .iter()
        .map(|&t| Ok(sol.eval(t * depth + shift)?.0))
        .collect::<Result<Vec<f64>>>()?;
    column[0] = 0.0;
    column[nsigma - 1] = 1.0;
    Ok(WaveField {
        psi: vec![column; x.len()],
        eta: vec![depth; x.len()],
        x,
        sigma,
        r: (s * s - 2.0 * omega_1(solver) + 2.0 * depth) / 3.0,
        stream: true,
    })
}

/// `eta -> eta + amplitude cos(wavenumber x)` with `psi` kept on the
/// `sigma` grid, so both boundary conditions survive exactly.
pub fn synth_perturbed_field(base: &WaveField, amplitude: f64, wavenumber: f64) -> Result<WaveField> {
    let low = base.eta.iter().copied().fold(f64::INFINITY, f64::min);
    if amplitude.abs() >= low {
        return Err(Error::OutOfRange(format!(
            "amplitude {amplitude} would reach the bottom (min eta = {low})"
        )));
    }
    let mut f = base.clone();
    for (e, &x) in f.eta.iter_mut().zip(&base.x) {
        *e += amplitude * (wavenumber * x).cos();
    }
    f.stream = base.stream && amplitude == 0.0;
    Ok(f)
}
